// Stand-in matcher for pipeline tests: block SSD search on a regular grid.
// Usage: mock_matcher A.png B.png OUT.csv
#include <cmath>
#include <iostream>
#include <limits>

#include "histreg/io.hpp"

namespace {

constexpr int kStep = 16;
constexpr int kRadius = 6;
constexpr int kSearch = 12;

double gray(const histreg::ImageBuffer &img, int x, int y) {
    double sum = 0.0;
    for (int c = 0; c < img.channels; ++c) {
        sum += img.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), c);
    }
    return sum / img.channels;
}

// SSD between a block of b centered at (bx, by) and a block of a centered at (ax, ay).
double ssd(const histreg::ImageBuffer &a, const histreg::ImageBuffer &b, int ax, int ay, int bx,
           int by) {
    double s = 0.0;
    for (int dy = -kRadius; dy <= kRadius; ++dy) {
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const double d = gray(a, ax + dx, ay + dy) - gray(b, bx + dx, by + dy);
            s += d * d;
        }
    }
    return s;
}

double parabola_offset(double left, double mid, double right) {
    const double denom = left - 2.0 * mid + right;
    return denom > 0.0 ? 0.5 * (left - right) / denom : 0.0;
}

}  // namespace

int main(int argc, char **argv) {
    if (argc != 4) {
        std::cerr << "usage: mock_matcher A.png B.png OUT.csv\n";
        return 1;
    }
    try {
        const auto a = histreg::io::read_image(argv[1]);
        const auto b = histreg::io::read_image(argv[2]);
        const int aw = static_cast<int>(a.meta.width);
        const int ah = static_cast<int>(a.meta.height);
        const int bw = static_cast<int>(b.meta.width);
        const int bh = static_cast<int>(b.meta.height);

        histreg::MatchSet out;
        for (int by = kRadius + kStep / 2; by + kRadius < bh; by += kStep) {
            for (int bx = kRadius + kStep / 2; bx + kRadius < bw; bx += kStep) {
                double best = std::numeric_limits<double>::infinity();
                int best_x = -1;
                int best_y = -1;
                for (int ay = by - kSearch; ay <= by + kSearch; ++ay) {
                    for (int ax = bx - kSearch; ax <= bx + kSearch; ++ax) {
                        if (ax - kRadius < 1 || ay - kRadius < 1 || ax + kRadius >= aw - 1 ||
                            ay + kRadius >= ah - 1) {
                            continue;
                        }
                        const double s = ssd(a, b, ax, ay, bx, by);
                        if (s < best) {
                            best = s;
                            best_x = ax;
                            best_y = ay;
                        }
                    }
                }
                if (best_x < 0) {
                    continue;
                }
                const double ox = parabola_offset(ssd(a, b, best_x - 1, best_y, bx, by), best,
                                                  ssd(a, b, best_x + 1, best_y, bx, by));
                const double oy = parabola_offset(ssd(a, b, best_x, best_y - 1, bx, by), best,
                                                  ssd(a, b, best_x, best_y + 1, bx, by));
                out.add({{best_x + ox, best_y + oy}, {static_cast<double>(bx), static_cast<double>(by)}},
                        "mock-ssd");
            }
        }
        histreg::io::write_match_csv(out, argv[3]);
    } catch (const std::exception &e) {
        std::cerr << "mock_matcher: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
