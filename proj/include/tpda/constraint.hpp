#pragma once
// Textual difference constraints: parsing to DNF.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tpda/zone.hpp"

namespace tpda {

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)), line(line_), col(col_) {}
};

enum class RelOp { Lt, Le, Eq, Ge, Gt, Ne };

/// x_i - x_j op k; j < 0 means "x_i op k" against the reference variable
struct Atom {
    int i = 0;
    int j = -1;
    RelOp op = RelOp::Le;
    Int k = 0;
};

using AtomDNF = std::vector<std::vector<Atom>>;

/// maps a variable name to an index, or nullopt if unknown
using VarResolver = std::function<std::optional<int>(const std::string&)>;

/// parse `a & (b | c)` style formulas into a list of atom conjunctions
AtomDNF parse_atoms(std::string_view text, const VarResolver& resolve, int line0 = 1, int col0 = 1);

/// atoms -> zones; reference variable index used for `x op k` atoms (must be >= 0 if any occur)
ZoneDNF atoms_to_zones(const AtomDNF& dnf, std::size_t dim, int reference = -1);

/// parse over variables x1..x<dim>
ZoneDNF parse_constraint(std::string_view text, std::size_t dim);

/// resolver accepting x1..x<dim>
VarResolver positional_resolver(std::size_t dim);

Int atoms_max_constant(const AtomDNF& dnf);

void add_atom(Zone& z, int i, int j, RelOp op, Int k);

} // namespace tpda
