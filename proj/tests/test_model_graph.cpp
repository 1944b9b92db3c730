#include "adamec/model_graph.hpp"

#include "test_support.hpp"

using namespace adamec;

TEST_CASE("conv cost annotations") {
    const auto op = make_operator("c", OperatorKind::Conv, 1, 34, 3, 16, 3, 1);
    CHECK(op.out_hw == 32);
    CHECK(op.mflops == Catch::Approx(0.884736));
    CHECK(op.param_bytes == 1792);
    CHECK(op.out_bytes == 65536);
    CHECK(op.input_bytes == 34 * 34 * 3 * 4);
    // channel round-up to 32 lanes: 32*32*9*32*32
    CHECK(operator_macs(op, 32) == Catch::Approx(9437184.0));
    CHECK(operator_macs(op, 1) == Catch::Approx(op.mflops * 1e6 / 2.0));
}

TEST_CASE("fc cost annotations") {
    const auto op = make_operator("f", OperatorKind::FC, 1, 0, 100, 10);
    CHECK(op.mflops == Catch::Approx(0.002));
    CHECK(op.param_bytes == 4040);
    CHECK(op.out_bytes == 40);
    CHECK(op.input_bytes == 400);
}

TEST_CASE("pool and bn cost annotations") {
    const auto pool = make_operator("p", OperatorKind::MaxPool, 1, 28, 64, 0, 3, 2);
    CHECK(pool.out_hw == 13);
    CHECK(pool.mflops == Catch::Approx(0.097344));
    CHECK(pool.param_bytes == 0);
    CHECK(pool.cout == 64);

    const auto bn = make_operator("b", OperatorKind::BN, 1, 11, 192);
    CHECK(bn.mflops == Catch::Approx(0.092928));
    CHECK(bn.param_bytes == 3072);
    CHECK(bn.out_hw == 11);
}

TEST_CASE("operator field validation") {
    CHECK_THROWS_MATCHES(make_operator("x", OperatorKind::Conv, 1, 34, 0, 16, 3, 1), Error,
                         HasCode(ErrorCode::InvalidArgument));
    CHECK_THROWS_MATCHES(make_operator("x", OperatorKind::Conv, 1, 34, 600, 16, 3, 1), Error,
                         HasCode(ErrorCode::InvalidArgument));
    CHECK_THROWS_MATCHES(make_operator("x", OperatorKind::Conv, 1, 34, 3, 16, 2, 1), Error,
                         HasCode(ErrorCode::InvalidArgument));
    CHECK_THROWS_MATCHES(make_operator("x", OperatorKind::Conv, 1, 3, 3, 16, 5, 1), Error,
                         HasCode(ErrorCode::InvalidArgument));
    CHECK_THROWS_MATCHES(make_operator("x", OperatorKind::Conv, 1, 34, 3, 16, 3, 4), Error,
                         HasCode(ErrorCode::InvalidArgument));
    CHECK_THROWS_MATCHES(make_operator("x", OperatorKind::FC, 1, 8, 100, 10), Error,
                         HasCode(ErrorCode::InvalidArgument));
    CHECK_THROWS_MATCHES(make_operator("x", OperatorKind::BN, 1, 8, 16, 32), Error,
                         HasCode(ErrorCode::InvalidArgument));
}

TEST_CASE("alexnet builder shape") {
    const auto g = build_model("alexnet", 1);
    CHECK(g.nodes.size() == 23);
    CHECK(g.block_count() == 8);
    CHECK(valid_cut_points(g).size() == 22);
    CHECK(g.total_mflops() == Catch::Approx(49.457408));
    CHECK(g.total_param_bytes() == 8707728);
    CHECK(g.nodes.back().kind == OperatorKind::FC);
    CHECK(g.nodes.back().cout == 100);
}

TEST_CASE("all builders produce valid graphs at several scales") {
    for (const auto& spec : known_model_specs()) {
        for (int scale : {1, 2}) {
            const auto g = build_model(spec, scale);
            REQUIRE_NOTHROW(g.validate());
            CHECK(g.nodes.size() >= 10);
            CHECK_FALSE(valid_cut_points(g).empty());
            for (const auto& n : g.nodes) {
                CHECK(n.cin >= 1);
                CHECK(n.cin <= 512);
                CHECK(n.cout <= 512);
                if (is_spatial(n.kind)) {
                    CHECK(n.hw >= 1);
                    CHECK(n.hw <= 512);
                    CHECK(n.out_hw >= 1);
                }
                CHECK(n.mflops >= 0.0);
            }
        }
    }
    CHECK_THROWS_MATCHES(build_model("alexnet", 0), Error, HasCode(ErrorCode::InvalidArgument));
    CHECK_THROWS_MATCHES(build_model("lenet", 1), Error, HasCode(ErrorCode::NotFound));
}

TEST_CASE("scaling multiplies channel widths up to the cap") {
    const auto g1 = build_model("alexnet", 1);
    const auto g2 = build_model("alexnet", 2);
    CHECK(g2.nodes[0].cout == 2 * g1.nodes[0].cout);
    CHECK(g2.nodes[0].cin == 3); // input channels stay put
    for (const auto& n : g2.nodes) CHECK(n.cout <= 512);
    CHECK(g2.total_param_bytes() > 2 * g1.total_param_bytes());
}

TEST_CASE("cut points on a diamond") {
    // A -> B -> D and A -> C -> D (Add): every boundary inside the diamond
    // is crossed by two tensors, so nothing between A and D is cuttable.
    DnnGraph g;
    g.name = "diamond";
    g.input_hw = 8;
    g.input_cin = 4;
    g.nodes = {
        make_operator("a", OperatorKind::Identity, 1, 8, 4),
        make_operator("b", OperatorKind::Conv, 1, 8, 4, 4, 1, 1),
        make_operator("c", OperatorKind::Conv, 1, 8, 4, 4, 1, 1),
        make_operator("d", OperatorKind::Add, 1, 8, 4),
        make_operator("e", OperatorKind::Identity, 1, 8, 4),
    };
    const auto bytes = g.nodes[0].out_bytes;
    g.edges = {{0, 1, bytes}, {0, 2, bytes}, {1, 3, bytes}, {2, 3, bytes}, {3, 4, bytes}};
    g.validate();

    const auto cuts = valid_cut_points(g);
    REQUIRE(cuts.size() == 1);
    CHECK(cuts[0].index == 4);
    CHECK(cuts[0].crossing_edge.src == 3);
    CHECK(cuts[0].crossing_edge.dst == 4);
    CHECK(cuts[0].crossing_bytes == bytes);
}

TEST_CASE("cut point bytes match the crossing tensor") {
    const auto g = build_model("alexnet", 1);
    for (const auto& cut : valid_cut_points(g)) {
        CHECK(cut.crossing_bytes == g.nodes[cut.crossing_edge.src].out_bytes);
        CHECK(cut.crossing_edge.src < cut.index);
        CHECK(cut.crossing_edge.dst >= cut.index);
    }
}

TEST_CASE("graph validation rejects malformed graphs") {
    const auto base = [] {
        DnnGraph g;
        g.name = "t";
        g.input_hw = 8;
        g.input_cin = 4;
        g.nodes = {make_operator("a", OperatorKind::Identity, 1, 8, 4),
                   make_operator("b", OperatorKind::Identity, 1, 8, 4)};
        g.edges = {{0, 1, g.nodes[0].out_bytes}};
        return g;
    };

    auto dup = base();
    dup.nodes[1].id = "a";
    CHECK_THROWS_MATCHES(dup.validate(), Error, HasCode(ErrorCode::InvalidArgument));

    auto backwards = base();
    backwards.edges[0] = {1, 0, backwards.nodes[1].out_bytes};
    CHECK_THROWS_MATCHES(backwards.validate(), Error, HasCode(ErrorCode::InvalidArgument));

    auto bad_bytes = base();
    bad_bytes.edges[0].bytes += 4;
    CHECK_THROWS_MATCHES(bad_bytes.validate(), Error, HasCode(ErrorCode::InvalidArgument));

    auto disconnected = base();
    disconnected.nodes.push_back(make_operator("c", OperatorKind::Identity, 1, 8, 4));
    CHECK_THROWS_MATCHES(disconnected.validate(), Error, HasCode(ErrorCode::InvalidArgument));

    auto mismatched = base();
    mismatched.nodes[1] = make_operator("b", OperatorKind::Identity, 1, 8, 5);
    CHECK_THROWS_MATCHES(mismatched.validate(), Error, HasCode(ErrorCode::InvalidArgument));
}

TEST_CASE("json round trip preserves every model") {
    for (const auto& spec : known_model_specs()) {
        const auto g = build_model(spec, 1);
        const auto back = graph_from_json(to_json(g));
        CHECK(back.name == g.name);
        REQUIRE(back.nodes.size() == g.nodes.size());
        for (std::size_t i = 0; i < g.nodes.size(); ++i) CHECK(back.nodes[i] == g.nodes[i]);
        REQUIRE(back.edges.size() == g.edges.size());
        for (std::size_t i = 0; i < g.edges.size(); ++i) CHECK(back.edges[i] == g.edges[i]);
    }
}

TEST_CASE("graph file io") {
    const auto g = build_model("resnet18", 1);
    const auto path = std::string("test_graph_io.json");
    save_graph(g, path);
    const auto back = load_graph(path);
    CHECK(back.nodes.size() == g.nodes.size());
    CHECK(back.total_mflops() == Catch::Approx(g.total_mflops()));
    std::remove(path.c_str());
    CHECK_THROWS_MATCHES(load_graph("no_such_file.json"), Error, HasCode(ErrorCode::IoError));
}
