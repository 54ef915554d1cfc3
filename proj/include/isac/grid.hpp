// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

struct GridAxis {
    std::string name;
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    int count() const {
        if (!(step > 0.0) || stop < start) throw std::invalid_argument("GridAxis: bad range");
        return static_cast<int>(std::floor((stop - start) / step + 0.5)) + 1;
    }
    double value(int i) const { return start + step * i; }
};

// Dense 2-D sampling of a spectral function; rows follow axis1, columns axis2.
template <typename Real = double>
struct Grid2DT {
    GridAxis axis1;
    GridAxis axis2;
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> values;

    void validate() const {
        if (values.rows() != axis1.count() || values.cols() != axis2.count())
            throw std::invalid_argument("Grid2D: value dimensions do not match axes");
        if (!values.allFinite() || (values.array() < Real(0)).any())
            throw std::invalid_argument("Grid2D: values must be finite and >= 0");
    }
};
using Grid2D = Grid2DT<double>;

struct Peak {
    double axis1_value = 0.0;
    double axis2_value = 0.0;
    double height = 0.0;
    int i = 0;
    int j = 0;
};

// Strict local maxima of a grid, tallest first. Maxima closer than
// min_separation cells (Chebyshev distance) merge into the taller one;
// ties in height resolve toward the lower (i, j) index so repeated runs
// and golden files stay stable.
template <typename Real>
std::vector<Peak> find_peaks(const Grid2DT<Real>& grid, int max_count, int min_separation) {
    if (max_count < 1) throw std::invalid_argument("find_peaks: max_count must be >= 1");
    const int rows = static_cast<int>(grid.values.rows());
    const int cols = static_cast<int>(grid.values.cols());

    std::vector<Peak> candidates;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const Real v = grid.values(i, j);
            bool is_max = true;
            for (int di = -1; di <= 1 && is_max; ++di) {
                for (int dj = -1; dj <= 1 && is_max; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ni = i + di;
                    const int nj = j + dj;
                    if (ni < 0 || nj < 0 || ni >= rows || nj >= cols) continue;
                    if (!(v > grid.values(ni, nj))) is_max = false;
                }
            }
            if (is_max)
                candidates.push_back({grid.axis1.value(i), grid.axis2.value(j),
                                      static_cast<double>(v), i, j});
        }
    }

    std::sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
        if (a.height != b.height) return a.height > b.height;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    std::vector<Peak> kept;
    for (const Peak& c : candidates) {
        bool near = false;
        for (const Peak& k : kept) {
            if (std::max(std::abs(c.i - k.i), std::abs(c.j - k.j)) < min_separation) {
                near = true;
                break;
            }
        }
        if (!near) {
            kept.push_back(c);
            if (static_cast<int>(kept.size()) == max_count) break;
        }
    }
    return kept;
}

}  // namespace isac
