// Regenerates the bundled indoor occupancy grid: an open hall along the top
// connected to two rooms through doorways.  The boundary belt is three
// cells thick so escaping trajectories cross a penalised band (with a
// usable gradient) before leaving the grid, and every free cell touching a
// wall carries a small apron value so walls repel slightly before contact.
//
// The grid is committed under scenarios/grids/; run this only when
// changing the layout.
//
//   usage: make_indoor_grid [out.csv]

#include <fstream>
#include <iostream>
#include <vector>

#include "rstl/fields.hpp"

namespace {

constexpr int kN = 40;
constexpr double kWall = 0.85;
constexpr double kApron = 0.15;

rstl::OccupancyGrid build() {
    rstl::OccupancyGrid g;
    g.width = kN;
    g.height = kN;
    g.cell_size = 0.25;  // 10 m x 10 m world
    g.origin_x = 0.0;
    g.origin_y = 0.0;
    g.values.assign(kN * kN, 0.0);

    auto at = [&](int x, int y) -> double& {
        return g.values[static_cast<std::size_t>(y) * kN + x];
    };
    auto fill = [&](int x0, int x1, int y0, int y1, double v) {
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) at(x, y) = v;
        }
    };

    // boundary belt, three cells thick
    fill(0, kN - 1, 0, 2, kWall);
    fill(0, kN - 1, kN - 3, kN - 1, kWall);
    fill(0, 2, 0, kN - 1, kWall);
    fill(kN - 3, 0 + kN - 1, 0, kN - 1, kWall);
    // horizontal wall separating the hall (top) from the rooms (bottom),
    // rows 26..27 (world y 6.5..7.0)
    fill(0, kN - 1, 26, 27, kWall);
    // doorways: room A at x 2.25..3.25, room B at x 6.75..7.75
    fill(9, 12, 26, 27, 0.0);
    fill(27, 30, 26, 27, 0.0);
    // vertical divider between the rooms, hung from the hall wall; the
    // rooms stay connected along the bottom
    fill(19, 20, 18, 27, kWall);

    // apron: free cells orthogonally adjacent to a wall cell
    std::vector<std::pair<int, int>> apron;
    for (int y = 0; y < kN; ++y) {
        for (int x = 0; x < kN; ++x) {
            if (at(x, y) != 0.0) continue;
            const bool near_wall = (x > 0 && at(x - 1, y) >= kWall) ||
                                   (x + 1 < kN && at(x + 1, y) >= kWall) ||
                                   (y > 0 && at(x, y - 1) >= kWall) ||
                                   (y + 1 < kN && at(x, y + 1) >= kWall);
            if (near_wall) apron.emplace_back(x, y);
        }
    }
    for (auto [x, y] : apron) at(x, y) = kApron;
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string out_path = argc > 1 ? argv[1] : "scenarios/grids/indoor_40x40.csv";
    const rstl::OccupancyGrid g = build();
    g.validate();
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot open " << out_path << " for writing\n";
        return 1;
    }
    rstl::save_occupancy_csv(g, out);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}
