#include "qdlab/table.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace qdlab {

std::size_t CoefficientTable::node_count() const noexcept {
    std::size_t n = 1;
    for (const int k : nodes) n *= static_cast<std::size_t>(std::max(k, 0));
    return n;
}

namespace {

constexpr int kMaxStencil = 81;  // 3^kMaxDim

/// Tensor-product quadratic Lagrange weights and their derivatives at one point.
struct Stencil {
    int size = 0;
    std::array<std::size_t, kMaxStencil> index{};
    std::array<double, kMaxStencil> w{};
    std::array<std::array<double, kMaxDim>, kMaxStencil> dw{};
    std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxStencil> d2w{};
};

class TableModel final : public CoefficientModel {
public:
    explicit TableModel(CoefficientTable table) : t_(std::move(table)) {
        const int d = t_.dim();
        h_.resize(d);
        stride_.resize(d);
        std::size_t s = 1;
        for (int i = 0; i < d; ++i) {
            h_[i] = (t_.hi[i] - t_.lo[i]) / (t_.nodes[i] - 1);
            stride_[i] = s;
            s *= static_cast<std::size_t>(t_.nodes[i]);
        }
    }

    int dim() const override { return t_.dim(); }
    int noise_dim() const override { return t_.noise_dim; }
    std::size_t num_controls() const override { return t_.controls.size(); }

    void eval(std::size_t control, const Vec& x, int order, CoefficientJet& out) const override {
        const int d = dim();
        const int d1 = noise_dim();
        out.reset(d, d1, order);
        const Stencil st = stencil(x, order);
        const auto& ctl = t_.controls.at(control);
        for (int i = 0; i < d; ++i) {
            for (int k = 0; k < d1; ++k) {
                const auto& data = ctl.sigma[static_cast<std::size_t>(i * d1 + k)];
                apply(st, data, order, d, [&](int a, int b, double v) {
                    if (a < 0) out.sigma(i, k) += v;
                    else if (b < 0) out.dsigma[a](i, k) += v;
                    else out.d2sigma[a][b](i, k) += v;
                });
            }
            if (!ctl.b.empty()) {
                apply(st, ctl.b[static_cast<std::size_t>(i)], order, d, [&](int a, int b, double v) {
                    if (a < 0) out.b[i] += v;
                    else if (b < 0) out.db[a][i] += v;
                    else out.d2b[a][b][i] += v;
                });
            }
        }
        auto scalar = [&](const std::vector<double>& data, double& value, Vec& grad, Mat& hess) {
            if (data.empty()) return;
            apply(st, data, order, d, [&](int a, int b, double v) {
                if (a < 0) value += v;
                else if (b < 0) grad[a] += v;
                else hess(a, b) += v;
            });
        };
        scalar(ctl.c, out.c, out.dc, out.d2c);
        scalar(ctl.f, out.f, out.df, out.d2f);
    }

    ScalarJet boundary(const Vec& x, int order) const override {
        const int d = dim();
        ScalarJet j{0.0, Vec::Zero(d), Mat::Zero(d, d)};
        const Stencil st = stencil(x, std::min(order, 2));
        apply(st, t_.g, order, d, [&](int a, int b, double v) {
            if (a < 0) j.value += v;
            else if (b < 0) j.grad[a] += v;
            else j.hess(a, b) += v;
        });
        return j;
    }

private:
    Stencil stencil(const Vec& x, int order) const {
        const int d = dim();
        std::array<int, kMaxDim> centre{};
        std::array<std::array<double, 3>, kMaxDim> l{}, dl{}, d2l{};
        for (int i = 0; i < d; ++i) {
            const double s = (x[i] - t_.lo[i]) / h_[i];
            centre[i] = std::clamp(static_cast<int>(std::lround(s)), 1, t_.nodes[i] - 2);
            const double u = s - centre[i];
            l[i] = {0.5 * u * (u - 1.0), 1.0 - u * u, 0.5 * u * (u + 1.0)};
            dl[i] = {(u - 0.5) / h_[i], -2.0 * u / h_[i], (u + 0.5) / h_[i]};
            const double h2 = h_[i] * h_[i];
            d2l[i] = {1.0 / h2, -2.0 / h2, 1.0 / h2};
        }
        Stencil st;
        int total = 1;
        for (int i = 0; i < d; ++i) total *= 3;
        st.size = total;
        for (int m = 0; m < total; ++m) {
            std::array<int, kMaxDim> off{};
            int rest = m;
            std::size_t idx = 0;
            for (int i = 0; i < d; ++i) {
                off[i] = rest % 3;
                rest /= 3;
                idx += static_cast<std::size_t>(centre[i] + off[i] - 1) * stride_[i];
            }
            st.index[m] = idx;
            double w = 1.0;
            for (int i = 0; i < d; ++i) w *= l[i][off[i]];
            st.w[m] = w;
            if (order >= 1) {
                for (int a = 0; a < d; ++a) {
                    double g = 1.0;
                    for (int i = 0; i < d; ++i) g *= i == a ? dl[i][off[i]] : l[i][off[i]];
                    st.dw[m][a] = g;
                }
            }
            if (order >= 2) {
                for (int a = 0; a < d; ++a) {
                    for (int b = 0; b < d; ++b) {
                        double g = 1.0;
                        for (int i = 0; i < d; ++i) {
                            if (i == a && i == b) g *= d2l[i][off[i]];
                            else if (i == a || i == b) g *= dl[i][off[i]];
                            else g *= l[i][off[i]];
                        }
                        st.d2w[m][a][b] = g;
                    }
                }
            }
        }
        return st;
    }

    /// Calls sink(-1, -1, value), sink(a, -1, partial_a) and sink(a, b, partial_ab).
    template <typename Sink>
    static void apply(const Stencil& st, const std::vector<double>& data, int order, int d, Sink&& sink) {
        for (int m = 0; m < st.size; ++m) {
            const double v = data[st.index[m]];
            if (v == 0.0) continue;
            sink(-1, -1, st.w[m] * v);
            if (order >= 1) {
                for (int a = 0; a < d; ++a) sink(a, -1, st.dw[m][a] * v);
            }
            if (order >= 2) {
                for (int a = 0; a < d; ++a) {
                    for (int b = 0; b < d; ++b) sink(a, b, st.d2w[m][a][b] * v);
                }
            }
        }
    }

    CoefficientTable t_;
    std::vector<double> h_;
    std::vector<std::size_t> stride_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, "coefficient table: " + message);
}

void validate(const CoefficientTable& t) {
    const int d = t.dim();
    require(d >= 1 && d <= kMaxDim, "dimension must be between 1 and " + std::to_string(kMaxDim));
    require(t.noise_dim >= 1 && t.noise_dim <= kMaxDim, "noise_dim must be between 1 and " + std::to_string(kMaxDim));
    require(t.lo.size() == d && t.hi.size() == d, "lo and hi need one entry per axis");
    for (int i = 0; i < d; ++i) {
        require(t.nodes[i] >= 3, "at least 3 nodes per axis");
        require(t.hi[i] > t.lo[i], "hi must exceed lo");
    }
    const std::size_t n = t.node_count();
    require(t.g.size() == n, "g needs one value per node");
    require(!t.controls.empty(), "at least one control");
    std::set<std::string> labels;
    for (const auto& c : t.controls) {
        require(labels.insert(c.label).second, "duplicate control label '" + c.label + "'");
        require(c.sigma.size() == static_cast<std::size_t>(d * t.noise_dim), "sigma needs d * noise_dim arrays");
        for (const auto& s : c.sigma) require(s.size() == n, "every sigma array needs one value per node");
        require(c.b.empty() || c.b.size() == static_cast<std::size_t>(d), "b needs one array per coordinate");
        for (const auto& s : c.b) require(s.size() == n, "every b array needs one value per node");
        require(c.c.empty() || c.c.size() == n, "c needs one value per node");
        require(c.f.empty() || c.f.size() == n, "f needs one value per node");
        for (const double v : c.c) require(v >= 0.0, "c must be nonnegative");
    }
}

}  // namespace

ControlProblem make_table_problem(const CoefficientTable& table, std::string name) {
    validate(table);
    std::vector<std::string> labels;
    for (const auto& c : table.controls) labels.push_back(c.label);
    auto model = std::make_shared<TableModel>(table);
    const ControlProblem p(std::move(name), model, labels, 1.0);
    const Vec centre = 0.5 * (table.lo + table.hi);
    const Vec half = 0.5 * (table.hi - table.lo);
    const double k0 = std::ceil(100.0 * sampled_k0(p, Domain::ellipsoid(centre, half), 500)) / 100.0;
    return p.with_k0(k0);
}

}  // namespace qdlab
