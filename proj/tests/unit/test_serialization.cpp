#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "../common/oracles.hpp"

using namespace mpadp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::path(::testing::TempDir()) / ("mpadp-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::shared_ptr<const Grid> line_grid(std::size_t n) { return std::make_shared<const Grid>(std::vector<std::size_t>{n}); }

}  // namespace

TEST(Json, ValuesAndVectors) {
    const ValueVector v{1.0 / 3.0, kBottom, -2.5e-300};
    const auto back = ext_vector_from_json<ValueVector>(Json::parse(to_json(v).dump()));
    EXPECT_EQ(back, v);
    EXPECT_TRUE(to_json(kBottom).is_null());
    EXPECT_THROW(extended_from_json(Json("x")), SerializationError);
    EXPECT_THROW(ext_vector_from_json<ValueVector>(Json(1.0)), SerializationError);
    EXPECT_EQ(parse_hex64(hex64(0xdeadbeef01234567ULL)), 0xdeadbeef01234567ULL);
    EXPECT_THROW(parse_hex64("xyz"), SerializationError);
    EXPECT_THROW(parse_hex64(""), SerializationError);
}

TEST(Json, DictionaryRoundTripAllKinds) {
    auto g = std::make_shared<const Grid>(std::vector<std::size_t>{4, 3});
    Dictionary D(12, g);
    D.add(make_indicator({1, 5, 7}));
    D.add(make_distance(4, 2.5, {1}, Metric::LInf));
    D.add(BregmanAtom{{0.1, -3.0}, 0.7});
    ValueVector t(12, 0.25);
    t[3] = kBottom;
    D.add(TabulatedAtom{t});
    const auto back = dictionary_from_json(Json::parse(to_json(D).dump()));
    ASSERT_EQ(back.size(), 4U);
    ASSERT_NE(back.grid(), nullptr);
    EXPECT_EQ(*back.grid(), *g);
    EXPECT_EQ(hash_dictionary(back), hash_dictionary(D));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_STREQ(atom_kind(back.atom(i)), atom_kind(D.atom(i)));
    EXPECT_THROW(dictionary_from_json(to_json(D), line_grid(12)), SerializationError);
    EXPECT_THROW(atom_from_json(Json{{"kind", "blob"}}), SerializationError);
    EXPECT_THROW(atom_from_json(Json{{"kind", "distance"}}), SerializationError);
}

TEST(Json, PartitionRoundTrip) {
    auto g = std::make_shared<const Grid>(std::vector<std::size_t>{9, 5});
    auto P = split_cell(dyadic_partition(*g, {1, 1}), *g, 2, 0);
    const auto back = partition_from_json(Json::parse(to_json(P).dump()));
    EXPECT_EQ(back.assignment(), P.assignment());
    ASSERT_TRUE(back.has_boxes());
    for (std::size_t c = 0; c < P.cell_count(); ++c) EXPECT_EQ(back.box(c), P.box(c));
    const auto plain = partition_from_json(to_json(Partition::from_assignment({0, 1, 0})));
    EXPECT_FALSE(plain.has_boxes());
    EXPECT_THROW(partition_from_json(Json{{"state_count", 2}, {"cells", {0, 2}}}), SerializationError);
    EXPECT_THROW(partition_from_json(Json{{"state_count", 3}, {"cells", {0, 0}}}), SerializationError);
}

TEST(Json, FormsRoundTrip) {
    std::mt19937_64 rng(1);
    const auto M = oracle::random_mdp(rng, 10, 0.8, 10);
    const auto W = oracle::random_dictionary(rng, 10, 3, true);
    const auto Z = oracle::random_dictionary(rng, 10, 4, true);
    const auto F = compile_forms(M, W, Z, 3);
    const auto back = forms_from_json(Json::parse(to_json(F).dump()));
    EXPECT_EQ(back.zw, F.zw);
    EXPECT_EQ(back.zTw, F.zTw);
    EXPECT_EQ(back.rho, 3U);
    EXPECT_EQ(back.gamma_eff, F.gamma_eff);
    EXPECT_EQ(back.mdp_hash, F.mdp_hash);
    EXPECT_EQ(back.w_hash, F.w_hash);
    EXPECT_EQ(back.z_hash, F.z_hash);
    auto bad = to_json(F);
    bad["w_count"] = 99;
    EXPECT_THROW(forms_from_json(bad), SerializationError);
}

TEST(Files, Errors) {
    EXPECT_THROW(read_json_file("/nonexistent/x.json"), IoError);
    EXPECT_THROW(write_text_file("/nonexistent/dir/x.txt", "x"), IoError);
    const auto dir = fresh_dir("files");
    write_text_file(dir / "bad.json", "{not json");
    EXPECT_THROW(read_json_file(dir / "bad.json"), SerializationError);
}

TEST(Cache, MissThenHitAndCorruptEntries) {
    const auto dir = fresh_dir("cache");
    const FormsCache cache(dir / "sub");
    const auto B = build_benchmark(ValueSpecId::V1dConvex, 65, 0.5);
    const auto D = make_partition_dictionary(fixed_constant_partition(*B.grid, 8), B.grid);
    const BellmanPower T(B.mdp, 4);
    bool hit = true;
    const auto a = compile_forms_cached(T, D, D, &cache, &hit);
    EXPECT_FALSE(hit);
    const auto b = compile_forms_cached(T, D, D, &cache, &hit);
    EXPECT_TRUE(hit);
    EXPECT_EQ(a.zTw, b.zTw);
    const auto p = cache.path_for(a.mdp_hash, a.w_hash, a.z_hash, 4);
    EXPECT_TRUE(fs::exists(p));
    write_text_file(p, "garbage");
    compile_forms_cached(T, D, D, &cache, &hit);
    EXPECT_FALSE(hit);
    compile_forms_cached(T, D, D, &cache, &hit);
    EXPECT_TRUE(hit);
    EXPECT_FALSE(cache.load(a.mdp_hash, a.w_hash, a.z_hash, 5).has_value());
    compile_forms_cached(T, D, D, nullptr, &hit);
    EXPECT_FALSE(hit);
}

TEST(Cache, ConcurrentStoresLeaveOneCompleteEntry) {
    const auto dir = fresh_dir("cache-mt");
    const FormsCache cache(dir);
    std::mt19937_64 rng(2);
    const auto M = oracle::random_mdp(rng, 40, 0.9, 40);
    const auto W = oracle::random_dictionary(rng, 40, 12, true);
    const auto F = compile_forms(M, W, W, 2);
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t)
        pool.emplace_back([&] {
            for (int k = 0; k < 5; ++k) cache.store(F);
        });
    for (auto& th : pool) th.join();
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    EXPECT_EQ(files, 1U);
    const auto got = cache.load(F.mdp_hash, F.w_hash, F.z_hash, 2);
    ASSERT_TRUE(got.has_value());
    EXPECT_EQ(got->zTw, F.zTw);
}

TEST(Checkpoint, PartitionResumeMatchesContinuousRun) {
    const auto B = build_benchmark(ValueSpecId::V2dSparse, 17, 0.919);
    auto T = std::make_shared<const BellmanPower>(B.mdp, 4);
    GreedyOptions opt;
    opt.tol = 1e-10;
    auto full = make_partition_state(T, B.grid, single_cell_partition(*B.grid), B.v_star, opt);
    run_matching_pursuit(full, 12, opt);

    auto part = make_partition_state(T, B.grid, single_cell_partition(*B.grid), B.v_star, opt);
    run_matching_pursuit(part, 6, opt);
    const auto text = checkpoint_to_json(part).dump();
    auto resumed = resume_greedy_state(Json::parse(text), T, B.grid, B.v_star, opt);
    EXPECT_EQ(resumed.error_trace.size(), 6U);
    EXPECT_LT(sup_distance(resumed.V, part.V), 1e-9);
    run_matching_pursuit(resumed, 12, opt);
    ASSERT_EQ(resumed.error_trace.size(), full.error_trace.size());
    EXPECT_EQ(resumed.partition->assignment(), full.partition->assignment());
    for (std::size_t i = 0; i < full.error_trace.size(); ++i) {
        EXPECT_EQ(resumed.error_trace[i].atom_desc, full.error_trace[i].atom_desc);
        EXPECT_NEAR(resumed.error_trace[i].err_l1, full.error_trace[i].err_l1, 1e-8);
    }
    EXPECT_LT(sup_distance(resumed.V, full.V), 1e-8);
}

TEST(Checkpoint, AffineResumeAndValidation) {
    const auto B = build_benchmark(ValueSpecId::V1dConvex, 65, 0.5);
    auto T = std::make_shared<const BellmanPower>(B.mdp, 2);
    GreedyOptions opt;
    opt.coupled = true;
    const auto D = make_distance_dictionary(std::vector<StateId>{0, 64}, 6.0, {}, Metric::L1, B.grid);
    auto st = make_greedy_state(T, D, D, B.v_star, opt);
    run_matching_pursuit(st, 4, opt);
    const Json j = Json::parse(checkpoint_to_json(st).dump());
    auto r = resume_greedy_state(j, T, B.grid, B.v_star, opt);
    EXPECT_EQ(r.W.size(), 4U);
    EXPECT_FALSE(r.partition.has_value());
    EXPECT_LT(sup_distance(r.V, st.V), 1e-7);
    auto T3 = std::make_shared<const BellmanPower>(B.mdp, 3);
    EXPECT_THROW(resume_greedy_state(j, T3, B.grid, B.v_star, opt), SerializationError);
    const auto other = build_benchmark(ValueSpecId::V1dBumps, 65, 0.5);
    auto To = std::make_shared<const BellmanPower>(other.mdp, 2);
    EXPECT_THROW(resume_greedy_state(j, To, other.grid, other.v_star, opt), SerializationError);
    Json broken = j;
    broken.erase("alpha");
    EXPECT_THROW(resume_greedy_state(broken, T, B.grid, B.v_star, opt), SerializationError);
}

TEST(Csv, HeadersQuotingAndParsing) {
    std::ostringstream tr;
    TraceRow row;
    row.n = 3;
    row.err_l1 = 0.5;
    row.err_linf = std::numeric_limits<double>::quiet_NaN();
    row.atom_kind = "bregman";
    row.atom_desc = "slope=1,2 \"q\"";
    row.rho = 4;
    write_trace_csv(tr, {row});
    std::istringstream in(tr.str());
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(header, "n,err_l1,err_linf,atom_kind,atom_desc,rho,norm");
    const auto fields = parse_csv_line(line);
    ASSERT_EQ(fields.size(), 7U);
    EXPECT_EQ(fields[2], "nan");
    EXPECT_EQ(fields[4], row.atom_desc);
    EXPECT_EQ(fields[6], "l1");

    std::ostringstream sw;
    write_sweep_csv(sw, {SweepRow{Method::FixedAffine, 32, 64, 0.1, 0.2, 1.5, 0.5}});
    EXPECT_EQ(sw.str().substr(0, sw.str().find('\n')), kSweepCsvHeader);
    EXPECT_NE(sw.str().find("fixed-affine,32,64,0.10000000000000001,"), std::string::npos);

    std::ostringstream vs;
    write_values_csv(vs, ValueVector{1.0, kBottom}, line_grid(2).get());
    EXPECT_EQ(vs.str(), "state,x1,value\n0,0,1\n1,1,-inf\n");
    std::ostringstream plain;
    write_values_csv(plain, ValueVector{2.0}, nullptr);
    EXPECT_EQ(plain.str(), "state,value\n0,2\n");
}
