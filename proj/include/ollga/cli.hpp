#pragma once
namespace ollga { int cli_main(int argc, char** argv); }
