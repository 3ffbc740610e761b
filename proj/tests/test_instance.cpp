#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "mtsp/instance.hpp"
#include "oracles.hpp"

using namespace mtsp;

TEST_CASE("explicit full matrix") {
    std::istringstream in(
        "NAME: tri\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\n"
        "EDGE_WEIGHT_SECTION\n1 1 1\n1 1 1\n1 1 1\nEOF\n");
    auto inst = load_tsplib(in);
    CHECK(inst.n == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(inst(i, j) == 1.0);
}

TEST_CASE("euc_2d 3-4-5") {
    std::istringstream in("NAME: p\nTYPE: TSP\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 4\nEOF\n");
    auto inst = load_tsplib(in);
    CHECK(inst(0, 1) == 5.0);
}

TEST_CASE("malformed input is rejected") {
    std::istringstream bad("NAME: p\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 x 4\n");
    CHECK_THROWS_AS(load_tsplib(bad), ParseError);
    std::istringstream atsp("NAME: p\nTYPE: ATSP\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\n");
    CHECK_THROWS_AS(load_tsplib(atsp), ParseError);
}

TEST_CASE("berlin52 costs match coordinates") {
    std::string path = std::string(MTSP_DATA_DIR) + "/berlin52.tsp";
    auto inst = load_tsplib_file(path);
    REQUIRE(inst.n == 52);
    // Own parse of the coordinate section.
    std::ifstream f(path);
    std::string line;
    std::vector<std::pair<double, double>> xy;
    bool inside = false;
    while (std::getline(f, line)) {
        if (line.rfind("NODE_COORD_SECTION", 0) == 0) {
            inside = true;
            continue;
        }
        if (!inside || line.rfind("EOF", 0) == 0) continue;
        std::istringstream ss(line);
        int id;
        double x, y;
        if (ss >> id >> x >> y) xy.emplace_back(x, y);
    }
    REQUIRE(xy.size() == 52);
    for (int j = 1; j < 52; ++j) {
        double d = std::floor(std::hypot(xy[0].first - xy[j].first, xy[0].second - xy[j].second) + 0.5);
        CHECK(inst(0, j) == d);
    }
}

TEST_CASE("berlin52 optimal tour") {
    auto inst = load_tsplib_file(std::string(MTSP_DATA_DIR) + "/berlin52.tsp");
    std::ifstream f(std::string(MTSP_DATA_DIR) + "/berlin52.opt.tour");
    auto order = read_tour(f);
    CHECK(is_permutation(order, 52));
    CHECK(tour_cost(inst, order) == 7542.0);
}

TEST_CASE("write and reload") {
    auto inst = random_euclidean(7, 4);
    std::stringstream ss;
    write_tsplib(ss, inst);
    auto back = load_tsplib(ss);
    REQUIRE(back.n == 7);
    CHECK((back.cost - inst.cost).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("random euclidean") {
    auto a = random_euclidean(3, 7), b = random_euclidean(3, 7);
    CHECK(a.cost == b.cost);
    auto c = random_euclidean(10, 1);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            for (int k = 0; k < 10; ++k) CHECK(c(i, k) <= c(i, j) + c(j, k) + 1e-12);
    CHECK(max_triangle_violation(c.cost) <= 1e-12);
    auto d = random_euclidean(50, 2);
    double s = 0.0;
    for (int i = 0; i < 50; ++i)
        for (int j = i + 1; j < 50; ++j) s += d(i, j);
    double mean = s / (50 * 49 / 2);
    CHECK(mean >= 0.4);
    CHECK(mean <= 0.6);
}

TEST_CASE("metric completion") {
    Eigen::MatrixXd c(3, 3);
    c << 0, 1, 5, 1, 0, 1, 5, 1, 0;
    CHECK(max_triangle_violation(c) == doctest::Approx(3.0));
    metric_completion(c);
    CHECK(c(0, 2) == 2.0);
    CHECK(max_triangle_violation(c) == 0.0);
}

TEST_CASE("exact opt") {
    MetricInstance tri;
    tri.n = 3;
    tri.cost = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
    CHECK(exact_opt(tri).cost == 3.0);

    std::istringstream sq("NAME: sq\nTYPE: TSP\nDIMENSION: 4\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n"
                          "1 0 0\n2 1 0\n3 1 1\n4 0 1\nEOF\n");
    CHECK(exact_opt(load_tsplib(sq)).cost == 4.0);

    for (int seed : {3, 11, 12}) {
        auto inst = random_euclidean(8, seed);
        auto r = exact_opt(inst);
        CHECK(r.cost == doctest::Approx(oracle::tsp(inst.cost)).epsilon(1e-12));
        CHECK(is_permutation(r.tour.order, 8));
        CHECK(tour_cost(inst, r.tour.order) == doctest::Approx(r.cost));
    }
    CHECK_THROWS_AS(exact_opt(random_euclidean(17, 1)), std::length_error);
}

TEST_CASE("two-opt never beats the optimum") {
    for (int seed = 1; seed <= 5; ++seed) {
        auto inst = random_euclidean(9, seed);
        std::vector<int> o(9);
        for (int i = 0; i < 9; ++i) o[i] = i;
        auto t = two_opt(inst, make_tour(inst, o));
        CHECK(is_permutation(t.order, 9));
        CHECK(t.cost >= oracle::tsp(inst.cost) - 1e-9);
        CHECK(t.cost == doctest::Approx(tour_cost(inst, t.order)));
    }
}
