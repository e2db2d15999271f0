#ifndef HLSOPT_PRINTER_HPP
#define HLSOPT_PRINTER_HPP

#include <string>

#include "hlsopt/ir.hpp"

namespace hlsopt {

// Deterministic textual dump: one statement per line, stable value numbering
// (definition order). Used for golden tests and the dump-ir command.
std::string printFunction(const Function &f);
std::string printProgram(const Program &p);

}  // namespace hlsopt

#endif
