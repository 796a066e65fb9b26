#pragma once

/**
 * @file serialization.hpp
 * @brief JSON for atoms, dictionaries, partitions, compiled forms and greedy
 * checkpoints; CSV writers for values, traces and sweeps; an on-disk cache
 * of compiled forms.
 *
 * Bottom (-inf) is written as JSON null. Doubles round-trip exactly.
 */

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "atom.hpp"
#include "dictionary.hpp"
#include "experiments.hpp"
#include "extended_value.hpp"
#include "grid.hpp"
#include "hash.hpp"
#include "matching_pursuit.hpp"
#include "mdp_io.hpp"
#include "partition.hpp"
#include "reduced_vi.hpp"

namespace mpadp {

using Json = nlohmann::json;

class SerializationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Json to_json(ExtendedValue v) { return v.is_bottom() ? Json(nullptr) : Json(v.value()); }

inline ExtendedValue extended_from_json(const Json& j) {
    if (j.is_null()) return kBottom;
    if (!j.is_number()) throw SerializationError("expected a number or null");
    return j.get<double>();
}

template <class Tag>
Json to_json(const ExtVector<Tag>& v) {
    Json out = Json::array();
    for (auto x : v) out.push_back(to_json(x));
    return out;
}

template <class Vec>
Vec ext_vector_from_json(const Json& j) {
    if (!j.is_array()) throw SerializationError("expected an array of values");
    Vec out;
    for (const auto& e : j) out.push_back(extended_from_json(e));
    return out;
}

inline std::uint64_t parse_hex64(const std::string& s) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(s, &used, 16);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw SerializationError("bad hex hash '" + s + "'");
    return v;
}

// ---- atoms and dictionaries ----

inline Json to_json(const Atom& a) {
    Json j;
    j["kind"] = atom_kind(a);
    if (auto* ind = std::get_if<IndicatorAtom>(&a)) {
        j["cell"] = ind->cell;
    } else if (auto* d = std::get_if<DistanceAtom>(&a)) {
        j["center"] = d->center;
        j["scale"] = d->scale;
        j["dims"] = d->dims;
        j["metric"] = to_string(d->metric);
    } else if (auto* b = std::get_if<BregmanAtom>(&a)) {
        j["slope"] = b->slope;
        j["lambda"] = b->lambda;
    } else {
        j["values"] = to_json(std::get<TabulatedAtom>(a).values);
    }
    return j;
}

inline Atom atom_from_json(const Json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "indicator") return make_indicator(j.at("cell").get<std::vector<StateId>>());
        if (kind == "distance")
            return make_distance(j.at("center").get<StateId>(), j.at("scale").get<double>(),
                                 j.at("dims").get<std::vector<std::size_t>>(),
                                 metric_from_string(j.at("metric").get<std::string>()));
        if (kind == "bregman") return BregmanAtom{j.at("slope").get<std::vector<double>>(), j.at("lambda").get<double>()};
        if (kind == "tabulated") return TabulatedAtom{ext_vector_from_json<ValueVector>(j.at("values"))};
        throw SerializationError("unknown atom kind '" + kind + "'");
    } catch (const Json::exception& e) {
        throw SerializationError(std::string("atom: ") + e.what());
    }
}

inline Json to_json(const Grid& g) { return Json{{"sizes", g.sizes()}}; }

inline Json to_json(const Dictionary& D) {
    Json j;
    j["state_count"] = D.state_count();
    j["grid"] = D.grid() ? to_json(*D.grid()) : Json(nullptr);
    j["atoms"] = Json::array();
    for (const auto& a : D.atoms()) j["atoms"].push_back(to_json(a));
    return j;
}

/// Reuses `grid` when given (its sizes must match the stored ones).
inline Dictionary dictionary_from_json(const Json& j, std::shared_ptr<const Grid> grid = nullptr) {
    try {
        const auto n = j.at("state_count").get<std::size_t>();
        if (j.contains("grid") && !j["grid"].is_null()) {
            const auto sizes = j["grid"].at("sizes").get<std::vector<std::size_t>>();
            if (!grid) grid = std::make_shared<const Grid>(sizes);
            else if (grid->sizes() != sizes) throw SerializationError("dictionary: grid differs from the stored one");
        }
        Dictionary D(n, grid);
        for (const auto& a : j.at("atoms")) D.add(atom_from_json(a));
        return D;
    } catch (const Json::exception& e) {
        throw SerializationError(std::string("dictionary: ") + e.what());
    }
}

// ---- partitions ----

inline Json to_json(const Partition& P) {
    Json j;
    j["state_count"] = P.state_count();
    j["cells"] = P.assignment();
    if (P.has_boxes()) {
        Json boxes = Json::array();
        for (std::size_t c = 0; c < P.cell_count(); ++c) {
            Json box = Json::array();
            for (const auto& iv : P.box(c)) box.push_back({iv.level, iv.index});
            boxes.push_back(box);
        }
        j["boxes"] = boxes;
    }
    return j;
}

inline Partition partition_from_json(const Json& j) {
    try {
        const auto cell_of = j.at("cells").get<std::vector<std::uint32_t>>();
        if (cell_of.size() != j.at("state_count").get<std::size_t>())
            throw SerializationError("partition: cell array length differs from state_count");
        std::uint32_t k = 0;
        for (auto c : cell_of) k = std::max(k, c + 1);
        std::vector<std::vector<StateId>> cells(k);
        for (std::size_t s = 0; s < cell_of.size(); ++s) cells[cell_of[s]].push_back(static_cast<StateId>(s));
        std::optional<std::vector<Box>> boxes;
        if (j.contains("boxes")) {
            boxes.emplace();
            for (const auto& jb : j["boxes"]) {
                Box b;
                for (const auto& iv : jb) b.push_back({iv.at(0).get<unsigned>(), iv.at(1).get<std::uint64_t>()});
                boxes->push_back(std::move(b));
            }
        }
        return Partition::from_cells(cell_of.size(), std::move(cells), std::move(boxes));
    } catch (const Json::exception& e) {
        throw SerializationError(std::string("partition: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw SerializationError(std::string("partition: ") + e.what());
    }
}

// ---- compiled forms ----

namespace detail {
inline Json matrix_to_json(const FormMatrix& m) {
    Json out = Json::array();
    for (double x : m.data()) out.push_back(to_json(ExtendedValue{x}));
    return out;
}

inline FormMatrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols) {
    std::vector<double> data;
    data.reserve(j.size());
    for (const auto& e : j) data.push_back(extended_from_json(e).value());
    try {
        return FormMatrix(rows, cols, std::move(data));
    } catch (const std::invalid_argument& e) {
        throw SerializationError(e.what());
    }
}
}  // namespace detail

inline Json to_json(const CompiledForms& F) {
    return Json{{"rho", F.rho},
                {"gamma_eff", F.gamma_eff},
                {"mdp_hash", hex64(F.mdp_hash)},
                {"w_hash", hex64(F.w_hash)},
                {"z_hash", hex64(F.z_hash)},
                {"z_count", F.z_count()},
                {"w_count", F.w_count()},
                {"zw", detail::matrix_to_json(F.zw)},
                {"zTw", detail::matrix_to_json(F.zTw)}};
}

inline CompiledForms forms_from_json(const Json& j) {
    try {
        CompiledForms F;
        F.rho = j.at("rho").get<std::size_t>();
        F.gamma_eff = j.at("gamma_eff").get<double>();
        F.mdp_hash = parse_hex64(j.at("mdp_hash").get<std::string>());
        F.w_hash = parse_hex64(j.at("w_hash").get<std::string>());
        F.z_hash = parse_hex64(j.at("z_hash").get<std::string>());
        const auto nz = j.at("z_count").get<std::size_t>(), nw = j.at("w_count").get<std::size_t>();
        F.zw = detail::matrix_from_json(j.at("zw"), nz, nw);
        F.zTw = detail::matrix_from_json(j.at("zTw"), nz, nw);
        return F;
    } catch (const Json::exception& e) {
        throw SerializationError(std::string("forms: ") + e.what());
    }
}

// ---- files ----

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw SerializationError(path.string() + ": " + e.what());
    }
}

/**
 * Compiled forms on disk, one JSON file per (MDP hash, W hash, Z hash, rho).
 * Writes go through a temporary file and a rename, so concurrent writers of
 * the same key leave one complete file.
 */
class FormsCache {
public:
    explicit FormsCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create cache directory '" + dir_.string() + "': " + ec.message());
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }

    std::filesystem::path path_for(std::uint64_t mdp, std::uint64_t w, std::uint64_t z, std::size_t rho) const {
        return dir_ / ("forms-" + hex64(mdp) + "-" + hex64(w) + "-" + hex64(z) + "-r" + std::to_string(rho) + ".json");
    }

    /// Cached forms, or nothing on a miss. A corrupt or mismatching file counts as a miss.
    std::optional<CompiledForms> load(std::uint64_t mdp, std::uint64_t w, std::uint64_t z, std::size_t rho) const {
        const auto p = path_for(mdp, w, z, rho);
        if (!std::filesystem::exists(p)) return std::nullopt;
        try {
            auto F = forms_from_json(read_json_file(p));
            if (F.mdp_hash != mdp || F.w_hash != w || F.z_hash != z || F.rho != rho) return std::nullopt;
            return F;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    void store(const CompiledForms& F) const {
        const auto p = path_for(F.mdp_hash, F.w_hash, F.z_hash, F.rho);
        std::ostringstream tag;
        static std::atomic<std::uint64_t> counter{0};
        tag << ".tmp-" << std::hex << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "-" << counter++;
        auto tmp = p;
        tmp += tag.str();
        write_json_file(tmp, to_json(F));
        std::error_code ec;
        std::filesystem::rename(tmp, p, ec);
        if (ec) {
            std::filesystem::remove(tmp, ec);
            throw IoError("cannot move cache entry into place: " + p.string());
        }
    }

private:
    std::filesystem::path dir_;
};

/// compile_forms with an optional cache; `hit` reports whether the cache answered.
inline CompiledForms compile_forms_cached(const BellmanPower& T, const Dictionary& W, const Dictionary& Z,
                                          const FormsCache* cache, bool* hit = nullptr) {
    if (hit) *hit = false;
    if (!cache) return compile_forms(T, W, Z);
    const auto mh = hash_mdp(T.base()), wh = hash_dictionary(W), zh = hash_dictionary(Z);
    if (auto F = cache->load(mh, wh, zh, T.rho())) {
        if (F->w_count() == W.size() && F->z_count() == Z.size()) {
            if (hit) *hit = true;
            return *F;
        }
    }
    auto F = compile_forms(T, W, Z);
    cache->store(F);
    return F;
}

// ---- greedy checkpoints ----

inline Json to_json(const TraceRow& r) {
    return Json{{"n", r.n},
                {"err_l1", r.err_l1},
                {"err_linf", r.err_linf},
                {"atom_kind", r.atom_kind},
                {"atom_desc", r.atom_desc},
                {"rho", r.rho},
                {"norm", to_string(r.norm)},
                {"split_dim", r.split_dim}};
}

inline TraceRow trace_row_from_json(const Json& j) {
    TraceRow r;
    r.n = j.at("n").get<std::size_t>();
    // NaN errors (no reference) are written as null
    r.err_l1 = j.at("err_l1").is_null() ? std::numeric_limits<double>::quiet_NaN() : j["err_l1"].get<double>();
    r.err_linf = j.at("err_linf").is_null() ? std::numeric_limits<double>::quiet_NaN() : j["err_linf"].get<double>();
    r.atom_kind = j.at("atom_kind").get<std::string>();
    r.atom_desc = j.at("atom_desc").get<std::string>();
    r.rho = j.at("rho").get<std::size_t>();
    r.norm = norm_from_string(j.at("norm").get<std::string>());
    r.split_dim = j.value("split_dim", -1);
    return r;
}

/// Dictionaries, coefficients, partition and trace of a greedy run.
inline Json checkpoint_to_json(const GreedyRunState& st) {
    Json j;
    j["format"] = "mpadp-greedy-checkpoint";
    j["version"] = 1;
    j["rho"] = st.T->rho();
    j["mdp_hash"] = hex64(hash_mdp(st.T->base()));
    j["W"] = to_json(st.W);
    j["Z"] = to_json(st.Z);
    j["alpha"] = to_json(st.alpha);
    j["partition"] = st.partition ? to_json(*st.partition) : Json(nullptr);
    j["trace"] = Json::array();
    for (const auto& r : st.error_trace) j["trace"].push_back(to_json(r));
    return j;
}

/**
 * Rebuilds a run from a checkpoint. T must be the operator the checkpoint
 * was made with (same MDP and rho); the fixed point is re-solved from the
 * stored coefficients.
 */
inline GreedyRunState resume_greedy_state(const Json& j, std::shared_ptr<const BellmanPower> T,
                                          std::shared_ptr<const Grid> grid, std::optional<ValueVector> reference,
                                          const GreedyOptions& opt) {
    try {
        if (j.at("format") != "mpadp-greedy-checkpoint") throw SerializationError("not a greedy checkpoint");
        if (j.at("rho").get<std::size_t>() != T->rho()) throw SerializationError("checkpoint rho differs");
        if (parse_hex64(j.at("mdp_hash").get<std::string>()) != hash_mdp(T->base()))
            throw SerializationError("checkpoint was made for a different MDP");
        const auto alpha = ext_vector_from_json<Coefficients>(j.at("alpha"));
        GreedyRunState st;
        if (!j.at("partition").is_null()) {
            st = make_partition_state(T, grid, partition_from_json(j["partition"]), std::move(reference), opt, alpha);
        } else {
            st = make_greedy_state(T, dictionary_from_json(j.at("W"), grid), dictionary_from_json(j.at("Z"), grid),
                                   std::move(reference), opt, alpha);
        }
        st.error_trace.clear();
        for (const auto& r : j.at("trace")) st.error_trace.push_back(trace_row_from_json(r));
        return st;
    } catch (const Json::exception& e) {
        throw SerializationError(std::string("checkpoint: ") + e.what());
    }
}

// ---- CSV ----

namespace detail {
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_number(double x) {
    if (x != x) return "nan";
    if (x == -std::numeric_limits<double>::infinity()) return "-inf";
    return format_double(x);
}
}  // namespace detail

inline constexpr const char* kTraceCsvHeader = "n,err_l1,err_linf,atom_kind,atom_desc,rho,norm";
inline constexpr const char* kSweepCsvHeader = "method,rho,n,err_l1,err_linf,wall_ms,compile_ms";

/// Columns state, x1..xd (when a grid is given), value.
inline void write_values_csv(std::ostream& os, const ValueVector& V, const Grid* grid) {
    os << "state";
    if (grid)
        for (std::size_t k = 0; k < grid->dimension(); ++k) os << ",x" << k + 1;
    os << ",value\n";
    for (std::size_t s = 0; s < V.size(); ++s) {
        os << s;
        if (grid)
            for (std::size_t k = 0; k < grid->dimension(); ++k)
                os << ',' << detail::csv_number(grid->coordinate(static_cast<StateId>(s), k));
        os << ',' << detail::csv_number(V[s].value()) << '\n';
    }
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
    os << kTraceCsvHeader << '\n';
    for (const auto& r : rows)
        os << r.n << ',' << detail::csv_number(r.err_l1) << ',' << detail::csv_number(r.err_linf) << ','
           << detail::csv_field(r.atom_kind) << ',' << detail::csv_field(r.atom_desc) << ',' << r.rho << ','
           << to_string(r.norm) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kSweepCsvHeader << '\n';
    for (const auto& r : rows)
        os << to_string(r.method) << ',' << r.rho << ',' << r.n << ',' << detail::csv_number(r.err_l1) << ','
           << detail::csv_number(r.err_linf) << ',' << detail::csv_number(r.wall_ms) << ','
           << detail::csv_number(r.compile_ms) << '\n';
}

/// Splits one CSV line, honoring double quotes.
inline std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

}  // namespace mpadp
