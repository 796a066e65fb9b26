#pragma once

/**
 * @file mdp_io.hpp
 * @brief Line-oriented MDP text format:
 *
 *     states N gamma G
 *     grid n1 ... nd        (optional, before the edges)
 *     edge s t r
 *     ...
 *
 * Blank lines and lines starting with '#' are ignored on input.
 */

#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdp.hpp"

namespace mpadp {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace detail

inline void write_mdp(std::ostream& os, const DeterministicMdp& M) {
    os << "states " << M.state_count() << " gamma " << detail::format_double(M.gamma()) << '\n';
    if (M.grid()) {
        os << "grid";
        for (auto n : M.grid()->sizes()) os << ' ' << n;
        os << '\n';
    }
    for (std::size_t s = 0; s < M.state_count(); ++s)
        for (const auto& tr : M.out_edges(static_cast<StateId>(s)))
            os << "edge " << s << ' ' << tr.target << ' ' << detail::format_double(tr.reward) << '\n';
}

inline DeterministicMdp read_mdp(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::size_t n = 0;
    double gamma = 0.0;
    std::vector<Edge> edges;
    std::shared_ptr<const Grid> grid;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        auto fail = [&](const std::string& msg) {
            throw FormatError("mdp line " + std::to_string(lineno) + ": " + msg);
        };
        if (tag == "states") {
            std::string gtag;
            if (have_header) fail("duplicate header");
            if (!(ls >> n >> gtag >> gamma) || gtag != "gamma") fail("expected 'states N gamma G'");
            have_header = true;
        } else if (tag == "grid") {
            if (!have_header) fail("grid before header");
            if (grid || !edges.empty()) fail("grid must come once, before the edges");
            std::vector<std::size_t> sizes;
            for (long long k; ls >> k;) {
                if (k < 2) fail("grid sizes must be at least 2");
                sizes.push_back(static_cast<std::size_t>(k));
            }
            if (!ls.eof()) fail("bad grid size");
            if (sizes.empty()) fail("grid needs at least one size");
            grid = std::make_shared<const Grid>(std::move(sizes));
            if (grid->state_count() != n) fail("grid sizes do not multiply to the state count");
            continue;
        } else if (tag == "edge") {
            if (!have_header) fail("edge before header");
            long long s = 0, t = 0;
            double r = 0.0;
            if (!(ls >> s >> t >> r)) fail("expected 'edge s t r'");
            if (s < 0 || t < 0 || static_cast<std::size_t>(s) >= n || static_cast<std::size_t>(t) >= n)
                fail("state id out of range");
            edges.push_back({static_cast<StateId>(s), static_cast<StateId>(t), r});
        } else {
            fail("unknown record '" + tag + "'");
        }
        std::string extra;
        if (ls >> extra) fail("trailing tokens");
    }
    if (!have_header) throw FormatError("mdp: missing 'states N gamma G' header");
    try {
        return DeterministicMdp(n, gamma, std::move(edges), std::move(grid));
    } catch (const std::exception& e) {
        throw FormatError(std::string("mdp: ") + e.what());
    }
}

inline void save_mdp(const std::string& path, const DeterministicMdp& M) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_mdp(os, M);
}

inline DeterministicMdp load_mdp(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    return read_mdp(is);
}

}  // namespace mpadp
