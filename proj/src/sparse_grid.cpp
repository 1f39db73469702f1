#include "cubsde/sparse_grid.hpp"

#include "cubsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cubsde {

bool Hypercube::contains(const Vector& x) const {
    if (x.size() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
        if (x(i) < lower[static_cast<std::size_t>(i)] || x(i) > upper[static_cast<std::size_t>(i)]) return false;
    }
    return true;
}

Hypercube minimal_hypercube(std::span<const Vector> points) {
    if (points.empty()) throw InvalidArgument("minimal_hypercube: empty point set");
    const auto d = static_cast<std::size_t>(points.front().size());
    Hypercube cube{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t i = 0; i < d; ++i) cube.lower[i] = cube.upper[i] = points.front()(static_cast<Eigen::Index>(i));
    for (const auto& p : points) {
        if (static_cast<std::size_t>(p.size()) != d) throw InvalidArgument("minimal_hypercube: mixed dimensions");
        for (std::size_t i = 0; i < d; ++i) {
            const double v = p(static_cast<Eigen::Index>(i));
            cube.lower[i] = std::min(cube.lower[i], v);
            cube.upper[i] = std::max(cube.upper[i], v);
        }
    }
    return cube;
}

int LevelIndex::level_sum() const { return std::accumulate(level.begin(), level.end(), 0); }

std::strong_ordering operator<=>(const LevelIndex& a, const LevelIndex& b) {
    if (auto c = a.level_sum() <=> b.level_sum(); c != 0) return c;
    if (auto c = a.level <=> b.level; c != 0) return c;
    return a.position <=> b.position;
}

namespace {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t out = 1;
    for (int i = 1; i <= k; ++i) out = out * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return out;
}

// All level vectors with sum <= p; dimensions flagged in `frozen` stay at 0.
void collect_levels(std::vector<int>& current, std::size_t dim, int budget,
                    const std::vector<bool>& frozen, std::vector<std::vector<int>>& out) {
    if (dim == current.size()) {
        out.push_back(current);
        return;
    }
    const int top = frozen[dim] ? 0 : budget;
    for (int l = 0; l <= top; ++l) {
        current[dim] = l;
        collect_levels(current, dim + 1, budget - l, frozen, out);
    }
    current[dim] = 0;
}

}  // namespace

std::uint64_t count_interior_level_nodes(int p, int d) {
    std::uint64_t total = 0;
    for (int k = 0; k <= p - d; ++k) total += binomial(k + d - 1, d - 1) << k;
    return total;
}

std::uint64_t count_nodes(int p, int d) {
    if (p < 0 || d < 1) throw InvalidArgument("count_nodes: need p >= 0 and d >= 1");
    std::uint64_t total = std::uint64_t{1} << d;
    for (int zeros = std::max(d - p, 0); zeros <= d - 1; ++zeros)
        total += binomial(d, zeros) * (std::uint64_t{1} << zeros) * count_interior_level_nodes(p, d - zeros);
    return total;
}

SparseGridLayout::SparseGridLayout(Hypercube cube, int order) : cube_(std::move(cube)), order_(order) {
    if (order_ < 0) throw InvalidArgument("SparseGridLayout: order must be >= 0");
    if (cube_.dim() < 1 || cube_.upper.size() != cube_.lower.size())
        throw InvalidArgument("SparseGridLayout: malformed hypercube");
    const auto d = static_cast<std::size_t>(cube_.dim());
    std::vector<bool> frozen(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!(cube_.lower[i] <= cube_.upper[i]))
            throw InvalidArgument("SparseGridLayout: lower bound exceeds upper bound");
        frozen[i] = cube_.collapsed(static_cast<int>(i));
    }

    std::vector<std::vector<int>> levels;
    std::vector<int> current(d, 0);
    collect_levels(current, 0, order_, frozen, levels);
    std::sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) {
        const int sa = std::accumulate(a.begin(), a.end(), 0);
        const int sb = std::accumulate(b.begin(), b.end(), 0);
        return sa != sb ? sa < sb : a < b;
    });

    for (auto& l : levels) {
        Block b;
        b.level = std::move(l);
        b.counts.resize(d);
        b.size = 1;
        for (std::size_t i = 0; i < d; ++i) {
            const int li = b.level[i];
            b.counts[i] = frozen[i] ? 1 : (li == 0 ? 2 : (std::size_t{1} << (li - 1)));
            b.size *= b.counts[i];
        }
        b.strides.assign(d, 1);
        for (std::size_t i = d - 1; i-- > 0;) b.strides[i] = b.strides[i + 1] * b.counts[i + 1];
        for (std::size_t i = 0; i < d; ++i) {
            if (!frozen[i] && b.level[i] == 0) b.boundary_dims.push_back(static_cast<int>(i));
        }
        b.offset = total_;
        total_ += b.size;
        block_of_level_.emplace(level_key(b.level), blocks_.size());
        blocks_.push_back(std::move(b));
    }
}

std::uint64_t SparseGridLayout::level_key(std::span<const int> level) const {
    std::uint64_t key = 0;
    for (auto it = level.rbegin(); it != level.rend(); ++it)
        key = key * static_cast<std::uint64_t>(order_ + 1) + static_cast<std::uint64_t>(*it);
    return key;
}

std::size_t SparseGridLayout::block_local_index(const Block& b, std::span<const int> position) const {
    std::size_t local = 0;
    for (std::size_t i = 0; i < b.counts.size(); ++i) {
        const int j = position[i];
        const std::size_t q = (b.level[i] == 0) ? static_cast<std::size_t>(j) : static_cast<std::size_t>((j - 1) / 2);
        local = local * b.counts[i] + q;
    }
    return local;
}

void SparseGridLayout::block_positions(const Block& b, std::size_t local, std::vector<int>& position) const {
    position.resize(b.counts.size());
    for (std::size_t i = b.counts.size(); i-- > 0;) {
        const std::size_t q = local % b.counts[i];
        local /= b.counts[i];
        position[i] = (b.level[i] == 0) ? static_cast<int>(q) : static_cast<int>(2 * q + 1);
    }
}

LevelIndex SparseGridLayout::level_index(std::size_t node) const {
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), node,
                               [](std::size_t n, const Block& b) { return n < b.offset; });
    const Block& b = *std::prev(it);
    LevelIndex li;
    li.level = b.level;
    block_positions(b, node - b.offset, li.position);
    return li;
}

Vector SparseGridLayout::coordinates(std::size_t node) const {
    const LevelIndex li = level_index(node);
    Vector x(dim());
    for (int i = 0; i < dim(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        x(i) = cube_.lower[k] + li.position[k] * std::ldexp(cube_.edge(i), -li.level[k]);
    }
    return x;
}

std::vector<Vector> SparseGridLayout::all_coordinates() const {
    std::vector<Vector> out;
    out.reserve(total_);
    std::vector<int> pos;
    for (const auto& b : blocks_) {
        for (std::size_t local = 0; local < b.size; ++local) {
            block_positions(b, local, pos);
            Vector x(dim());
            for (int i = 0; i < dim(); ++i) {
                const auto k = static_cast<std::size_t>(i);
                x(i) = cube_.lower[k] + pos[k] * std::ldexp(cube_.edge(i), -b.level[k]);
            }
            out.push_back(std::move(x));
        }
    }
    return out;
}

std::size_t SparseGridLayout::index_of(const LevelIndex& li) const {
    if (static_cast<int>(li.level.size()) != dim() || li.position.size() != li.level.size())
        throw InvalidArgument("SparseGridLayout::index_of: wrong dimension");
    auto it = block_of_level_.find(level_key(li.level));
    if (it == block_of_level_.end()) throw InvalidArgument("SparseGridLayout::index_of: level not in grid");
    const Block& b = blocks_[it->second];
    for (std::size_t i = 0; i < li.level.size(); ++i) {
        const int j = li.position[i];
        const bool ok = b.counts[i] == 1 && b.level[i] == 0 ? j == 0
                        : b.level[i] == 0                    ? (j == 0 || j == 1)
                                                             : (j % 2 == 1 && j > 0 && j < (1 << b.level[i]));
        if (!ok) throw InvalidArgument("SparseGridLayout::index_of: non-canonical position");
    }
    return b.offset + block_local_index(b, li.position);
}

void SparseGridLayout::hierarchize(std::span<double> values, std::size_t width) const {
    if (width == 0 || values.size() != total_ * width)
        throw InvalidArgument("SparseGridLayout::hierarchize: size mismatch");
    const auto d = static_cast<std::size_t>(dim());
    std::vector<std::size_t> order(blocks_.size());
    std::vector<int> pos, npos, nlevel;
    for (std::size_t k = 0; k < d; ++k) {
        if (cube_.collapsed(static_cast<int>(k))) continue;
        // Finer levels first, so parents still hold the pre-sweep values.
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return blocks_[a].level[k] > blocks_[b].level[k];
        });
        for (std::size_t bi : order) {
            const Block& b = blocks_[bi];
            const int lk = b.level[k];
            if (lk == 0) break;
            for (std::size_t local = 0; local < b.size; ++local) {
                block_positions(b, local, pos);
                std::size_t parent[2];
                int slot = 0;
                for (int side : {-1, 1}) {
                    int L = lk;
                    int P = pos[k] + side;
                    while (L > 0 && P % 2 == 0) {
                        P /= 2;
                        --L;
                    }
                    nlevel = b.level;
                    nlevel[k] = L;
                    npos = pos;
                    npos[k] = P;
                    const Block& nb = blocks_[block_of_level_.at(level_key(nlevel))];
                    parent[slot++] = (nb.offset + block_local_index(nb, npos)) * width;
                }
                const std::size_t self = (b.offset + local) * width;
                for (std::size_t c = 0; c < width; ++c)
                    values[self + c] -= 0.5 * (values[parent[0] + c] + values[parent[1] + c]);
            }
        }
    }
}

Vector SparseGridLayout::clamp(const Vector& x) const {
    if (x.size() != dim()) throw InvalidArgument("SparseGridLayout::clamp: wrong dimension");
    Vector y(x.size());
    clamp(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
          std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
    return y;
}

void SparseGridLayout::clamp(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < dim(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double lo = cube_.lower[k];
        const double hi = cube_.upper[k];
        const double slack = cube_.collapsed(i) ? 1e-9 * std::max(1.0, std::abs(lo)) : 1e-9 * cube_.edge(i);
        if (!(x[k] >= lo - slack && x[k] <= hi + slack)) {
            std::ostringstream msg;
            msg << "query coordinate " << i << " = " << x[k] << " outside [" << lo << ", " << hi << "]";
            throw OutsideDomain(msg.str());
        }
        y[k] = std::clamp(x[k], lo, hi);
    }
}

std::vector<double> SparseGridLayout::coordinate_array() const {
    const auto d = static_cast<std::size_t>(dim());
    std::vector<double> out;
    out.reserve(total_ * d);
    std::vector<int> pos;
    for (const auto& b : blocks_) {
        for (std::size_t local = 0; local < b.size; ++local) {
            block_positions(b, local, pos);
            for (std::size_t i = 0; i < d; ++i)
                out.push_back(cube_.lower[i] + pos[i] * std::ldexp(cube_.edge(static_cast<int>(i)), -b.level[i]));
        }
    }
    return out;
}

double SparseGridLayout::evaluate(std::span<const double> surpluses, const Vector& x) const {
    double out = 0.0;
    evaluate(surpluses, 1, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
             std::span<double>(&out, 1));
    return out;
}

void SparseGridLayout::evaluate(std::span<const double> surpluses, std::size_t width, std::span<const double> x,
                                std::span<double> out) const {
    const auto d = static_cast<std::size_t>(dim());
    if (surpluses.size() != total_ * width || out.size() != width || x.size() != d)
        throw InvalidArgument("SparseGridLayout::evaluate: size mismatch");
    const auto levels = static_cast<std::size_t>(order_ + 1);
    // For level L >= 1 exactly one hat per dimension can be nonzero at x:
    // cell[i * levels + L] is its local index, hat[...] its value.
    thread_local std::vector<std::size_t> cell;
    thread_local std::vector<double> hat;
    thread_local std::vector<double> unit;
    cell.assign(d * levels, 0);
    hat.assign(d * levels, 1.0);
    unit.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        if (cube_.collapsed(static_cast<int>(i))) continue;
        const double t = std::clamp((x[i] - cube_.lower[i]) / cube_.edge(static_cast<int>(i)), 0.0, 1.0);
        unit[i] = t;
        for (std::size_t L = 1; L < levels; ++L) {
            const double u = std::ldexp(t, static_cast<int>(L));
            const auto cells = static_cast<long long>(1) << (L - 1);
            const long long q = std::clamp(static_cast<long long>(u * 0.5), 0LL, cells - 1);
            cell[i * levels + L] = static_cast<std::size_t>(q);
            hat[i * levels + L] = std::max(0.0, 1.0 - std::abs(u - static_cast<double>(2 * q + 1)));
        }
    }

    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& b : blocks_) {
        std::size_t base = b.offset;
        double weight = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            const auto L = static_cast<std::size_t>(b.level[i]);
            if (L == 0) continue;
            base += cell[i * levels + L] * b.strides[i];
            weight *= hat[i * levels + L];
        }
        if (weight == 0.0) continue;
        const std::size_t corners = std::size_t{1} << b.boundary_dims.size();
        for (std::size_t mask = 0; mask < corners; ++mask) {
            std::size_t local = base;
            double w = weight;
            for (std::size_t k = 0; k < b.boundary_dims.size(); ++k) {
                const auto i = static_cast<std::size_t>(b.boundary_dims[k]);
                if (mask >> k & 1U) {
                    local += b.strides[i];
                    w *= unit[i];
                } else {
                    w *= 1.0 - unit[i];
                }
            }
            const double* coeff = surpluses.data() + local * width;
            for (std::size_t c = 0; c < width; ++c) out[c] += w * coeff[c];
        }
    }
}

std::vector<std::pair<LevelIndex, Vector>> enumerate_nodes(const Hypercube& cube, int p) {
    const SparseGridLayout layout(cube, p);
    std::vector<std::pair<LevelIndex, Vector>> out;
    out.reserve(layout.size());
    const auto coords = layout.all_coordinates();
    for (std::size_t n = 0; n < layout.size(); ++n) out.emplace_back(layout.level_index(n), coords[n]);
    return out;
}

SparseInterpolant::SparseInterpolant(std::shared_ptr<const SparseGridLayout> layout, std::vector<double> surpluses)
    : layout_(std::move(layout)), surpluses_(std::move(surpluses)) {
    if (!layout_ || surpluses_.size() != layout_->size())
        throw InvalidArgument("SparseInterpolant: surplus count does not match layout");
}

SparseInterpolant SparseInterpolant::from_nodal_values(std::shared_ptr<const SparseGridLayout> layout,
                                                       std::vector<double> values) {
    if (!layout || values.size() != layout->size())
        throw InvalidArgument("SparseInterpolant::from_nodal_values: value count does not match layout");
    layout->hierarchize(values);
    return SparseInterpolant(std::move(layout), std::move(values));
}

SparseInterpolant SparseInterpolant::hierarchize(const Hypercube& cube, int p, const Source& source) {
    auto layout = std::make_shared<const SparseGridLayout>(cube, p);
    std::vector<double> values;
    values.reserve(layout->size());
    for (const auto& x : layout->all_coordinates()) values.push_back(source(x));
    return from_nodal_values(std::move(layout), std::move(values));
}

double SparseInterpolant::eval(const Vector& x) const {
    if (x.size() != layout_->dim()) throw InvalidArgument("SparseInterpolant::eval: wrong dimension");
    return layout_->evaluate(surpluses_, layout_->clamp(x));
}

namespace {

double recurse_surplus(const Hypercube& cube, const LevelIndex& li, Vector& point, int r,
                       const SparseInterpolant::Source& source) {
    if (r == 0) return source(point);
    const int i = r - 1;
    const auto k = static_cast<std::size_t>(i);
    const double a = cube.lower[k];
    const double delta = std::ldexp(cube.edge(i), -li.level[k]);
    const int j = li.position[k];
    point(i) = a + j * delta;
    double theta = recurse_surplus(cube, li, point, r - 1, source);
    if (li.level[k] > 0) {
        point(i) = a + (j - 1) * delta;
        theta -= 0.5 * recurse_surplus(cube, li, point, r - 1, source);
        point(i) = a + (j + 1) * delta;
        theta -= 0.5 * recurse_surplus(cube, li, point, r - 1, source);
    }
    return theta;
}

}  // namespace

double surplus_by_recursion(const Hypercube& cube, const LevelIndex& li, const SparseInterpolant::Source& source) {
    if (static_cast<int>(li.level.size()) != cube.dim()) throw InvalidArgument("surplus_by_recursion: wrong dimension");
    Vector point(cube.dim());
    return recurse_surplus(cube, li, point, cube.dim(), source);
}

}  // namespace cubsde
