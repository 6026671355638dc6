#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "gridnav/grid.hpp"
#include "gridnav/rng.hpp"

using namespace gridnav;

TEST_CASE("grid indexing round-trips") {
    Grid<int> g(7, 5, 0);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) {
            const Cell c{x, y};
            CHECK(g.cell_of(g.index_of(c)) == c);
        }
    CHECK_FALSE(g.in_bounds({7, 0}));
    CHECK_FALSE(g.in_bounds({0, -1}));
}

TEST_CASE("walk_ray visits the analytic cell sequence on an axis ray") {
    // Ray along +x from the center of cell (0,2) must enter cell k at
    // distance (k - 0.5) * resolution from the origin point.
    const double res = 0.5;
    std::vector<RayStep> steps;
    walk_ray({0.25, 1.25}, {1.0, 0.0}, 10.0, res, 10, 5,
             [&](const RayStep& s) {
                 steps.push_back(s);
                 return false;
             });
    REQUIRE(steps.size() == 10);
    for (int k = 0; k < 10; ++k) {
        CHECK(steps[k].cell == Cell{k, 2});
        const double expect = k == 0 ? 0.0 : (k - 0.5) * res;
        CHECK(steps[k].t_entry == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("walk_ray on diagonals stays 8-connected and monotone") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec2 origin{rng.uniform(0.1, 9.9), rng.uniform(0.1, 9.9)};
        const double a = rng.uniform(-kPi, kPi);
        std::vector<RayStep> steps;
        walk_ray(origin, {std::cos(a), std::sin(a)}, 6.0, 1.0, 10, 10,
                 [&](const RayStep& s) {
                     steps.push_back(s);
                     return false;
                 });
        REQUIRE_FALSE(steps.empty());
        CHECK(steps.front().cell == Cell{int(origin.x), int(origin.y)});
        for (std::size_t i = 1; i < steps.size(); ++i) {
            CHECK(steps[i].t_entry >= steps[i - 1].t_entry);
            const int dx = std::abs(steps[i].cell.x - steps[i - 1].cell.x);
            const int dy = std::abs(steps[i].cell.y - steps[i - 1].cell.y);
            CHECK(dx + dy == 1);  // crosses one border at a time
        }
    }
}

TEST_CASE("flood_fill4 matches a BFS oracle on random grids") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 20, h = 15;
        Grid<std::uint8_t> open(w, h, 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) open.at({x, y}) = rng.uniform() < 0.7;
        const Cell start{int(rng.uniform_index(w)), int(rng.uniform_index(h))};
        if (!open.at(start)) continue;

        const auto mask = flood_fill4(w, h, start,
                                      [&](Cell c) { return open.at(c) != 0; });

        // Independent queue-based BFS.
        std::set<std::pair<int, int>> oracle;
        std::vector<Cell> q{start};
        oracle.insert({start.x, start.y});
        while (!q.empty()) {
            const Cell c = q.back();
            q.pop_back();
            for (const Cell d : kDir4) {
                const Cell n{c.x + d.x, c.y + d.y};
                if (n.x < 0 || n.y < 0 || n.x >= w || n.y >= h) continue;
                if (!open.at(n) || oracle.count({n.x, n.y})) continue;
                oracle.insert({n.x, n.y});
                q.push_back(n);
            }
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                CHECK((mask.at({x, y}) != 0) == (oracle.count({x, y}) > 0));
    }
}
