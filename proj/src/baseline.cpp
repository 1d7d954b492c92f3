#include "drift/baseline.hpp"

#include <stdexcept>

#include <Eigen/Dense>

#include "drift/common.hpp"

namespace drift {

std::vector<double> estimate_rss_baseline(std::span<const RssFrame> empty_frames, int reference_frames) {
    if (reference_frames < 1) throw std::invalid_argument("estimate_rss_baseline: reference_frames must be >= 1");
    if (static_cast<int>(empty_frames.size()) < reference_frames)
        throw std::invalid_argument("estimate_rss_baseline: recording shorter than reference_frames");
    const RssFrame& first = empty_frames.front();
    std::vector<double> baseline(first.v.size(), 0.0);
    for (int f = 0; f < reference_frames; ++f) {
        if (empty_frames[f].v.size() != baseline.size())
            throw std::invalid_argument("estimate_rss_baseline: inconsistent frame dimensions");
        for (std::size_t i = 0; i < baseline.size(); ++i) {
            const double v = empty_frames[f].v[i];
            if (is_missing(v))
                throw std::invalid_argument("estimate_rss_baseline: MISSING entry (impute first)");
            baseline[i] += v;
        }
    }
    for (double& v : baseline) v /= reference_frames;
    return baseline;
}

std::vector<double> attenuation_vector(const RssFrame& frame, const std::vector<double>& baseline) {
    if (baseline.size() != frame.v.size())
        throw std::invalid_argument("attenuation_vector: baseline does not match frame dimensions");
    std::vector<double> delta(frame.links, 0.0);
    for (int l = 0; l < frame.links; ++l) {
        double acc = 0.0;
        for (int c = 0; c < frame.channels; ++c) {
            const double v = frame.at(l, c);
            if (is_missing(v)) throw std::invalid_argument("attenuation_vector: MISSING entry (impute first)");
            acc += baseline[static_cast<std::size_t>(l) * frame.channels + c] - v;
        }
        delta[l] = acc / frame.channels;
    }
    return delta;
}

struct RtiSolver::Impl {
    Eigen::MatrixXd W;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::MatrixXd A;
    int grid_px = 0;
};

RtiSolver::RtiSolver(const WeightMatrix& weights, double reg_lambda, int grid_px) : impl_(new Impl) {
    if (!(reg_lambda > 0)) throw std::invalid_argument("rti: reg_lambda must be positive");
    if (grid_px * grid_px != weights.cols)
        throw std::invalid_argument("rti: weight matrix columns do not match the pixel grid");
    impl_->grid_px = grid_px;
    impl_->W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        weights.w.data(), weights.rows, weights.cols);
    impl_->A = impl_->W.transpose() * impl_->W;
    impl_->A.diagonal().array() += reg_lambda;
    impl_->llt.compute(impl_->A);
    if (impl_->llt.info() != Eigen::Success)
        throw std::runtime_error("rti: Cholesky factorization of the normal equations failed");
}

RtiSolver::~RtiSolver() = default;
RtiSolver::RtiSolver(RtiSolver&&) noexcept = default;
RtiSolver& RtiSolver::operator=(RtiSolver&&) noexcept = default;

ReconImage RtiSolver::solve(const std::vector<double>& delta_g) const {
    if (static_cast<int>(delta_g.size()) != impl_->W.rows())
        throw std::invalid_argument("rti: delta_g has " + std::to_string(delta_g.size()) +
                                    " entries, weight matrix has " + std::to_string(impl_->W.rows()) +
                                    " rows");
    const Eigen::Map<const Eigen::VectorXd> g(delta_g.data(), delta_g.size());
    const Eigen::VectorXd rhs = impl_->W.transpose() * g;
    Eigen::VectorXd r = impl_->llt.solve(rhs);
    // one step of iterative refinement keeps the residual near machine precision
    r += impl_->llt.solve(rhs - impl_->A * r);
    if (!r.allFinite()) throw std::runtime_error("rti: solver produced non-finite values");

    ReconImage img(impl_->grid_px, impl_->grid_px);
    for (int i = 0; i < r.size(); ++i) img.v[static_cast<std::size_t>(i)] = r[i];
    return img;
}

ReconImage rti_reconstruct(const WeightMatrix& weights, const std::vector<double>& delta_g,
                           const TikhonovConfig& config, int grid_px) {
    return RtiSolver(weights, config.reg_lambda, grid_px).solve(delta_g);
}

}  // namespace drift
