#pragma once

#include <set>

#include "lexer.hpp"
#include "mpst/ast.hpp"
#include "mpst/types.hpp"

namespace mpst::detail {

// Entry points shared between the string front ends and the workspace reader.
ProcessPtr parse_process(Lexer& lx, std::set<std::string> bound_vars = {});
GlobalTypePtr parse_global(Lexer& lx);
LocalTypePtr parse_local(Lexer& lx);
Exchange parse_exchange(Lexer& lx);

}  // namespace mpst::detail
