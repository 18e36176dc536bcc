#pragma once

#include <vector>

#include "ivprop/bounds.hpp"
#include "ivprop/dataset.hpp"
#include "ivprop/inn.hpp"
#include "ivprop/layers.hpp"

// DeepONet and its interval variants. Trunk inputs are always precise; only
// the branch carries interval uncertainty.

namespace ivp::onet {

using nn::BoundPair;

struct DeepONet {
    nn::MlpModel branch;  // m sensors -> q
    nn::MlpModel trunk;   // coord dim -> q

    std::size_t latent_dim() const { return trunk.out_dim(); }
    std::size_t sensor_dim() const { return branch.in_dim(); }
};

DeepONet make_deeponet(std::size_t m, std::size_t coord_dim, std::size_t q,
                       const std::vector<std::size_t>& branch_hidden,
                       const std::vector<std::size_t>& trunk_hidden, std::uint64_t seed);

double deeponet_forward(const DeepONet& net, const Tensor& u, const Tensor& x);
// Batch evaluation at all coords (p x dim) for one u.
Tensor deeponet_forward_grid(const DeepONet& net, const Tensor& u, const Tensor& coords);

// Branch on the interleaved lo/hi sensor vector (2m -> 2q, interleaved
// latents), dense head on the per-latent products (2q -> 2).
struct NaiveIntervalDeepONet {
    nn::MlpModel branch;  // 2m -> 2q
    nn::MlpModel trunk;   // coord dim -> q
    nn::DenseLayer head;  // (2 x 2q), linear

    std::size_t latent_dim() const { return trunk.out_dim(); }
    std::size_t sensor_dim() const { return branch.in_dim() / 2; }
};

NaiveIntervalDeepONet make_naive_deeponet(std::size_t m, std::size_t coord_dim, std::size_t q,
                                          const std::vector<std::size_t>& branch_hidden,
                                          const std::vector<std::size_t>& trunk_hidden,
                                          std::uint64_t seed);

BoundPair naive_interval_forward(const NaiveIntervalDeepONet& net, const IntervalVector& u,
                                 const Tensor& x);

struct InnDeepONet {
    inn::InnModel branch;           // m -> q, interval weights
    nn::MlpModel trunk;             // coord dim -> q
    inn::IntervalDenseLayer head;   // (1 x q), linear

    std::size_t latent_dim() const { return trunk.out_dim(); }
    std::size_t sensor_dim() const { return branch.in_dim(); }
};

InnDeepONet make_inn_deeponet(std::size_t m, std::size_t coord_dim, std::size_t q,
                              const std::vector<std::size_t>& branch_hidden,
                              const std::vector<std::size_t>& trunk_hidden, std::uint64_t seed,
                              double radius_frac = 0.01);

Interval inn_deeponet_forward(const InnDeepONet& net, const IntervalVector& u, const Tensor& x);

enum class BoundMethod { Ibp, Crown };

// Trunk evaluated exactly; branch bounded by IBP or CROWN over the box; the
// latent dot product combined with sign-split tau coefficients. One interval
// per coordinate row of coords.
inn::IntervalBatch bounded_deeponet_forward(const DeepONet& net, const bp::BoxSpec& branch_box,
                                            const Tensor& coords, BoundMethod method);

// --- training tuples ---

using data::FunctionSample;

struct TrainingTuple {
    std::size_t function = 0;  // index into the sample set
    std::size_t coord = 0;     // row of coords
    double value = 0.0;
};

// N samples x p coords -> N*p tuples (ragged grids rejected).
std::vector<TrainingTuple> make_training_tuples(const std::vector<FunctionSample>& samples);

// --- tape-recorded per-function forwards (training paths) ---

// Trunk latents for the shared coordinate grid: (p x q).
ad::VarId trunk_latents_t(ad::Tape& t, const nn::MlpVars& trunk, ad::VarId coords);

// Standard pointwise DeepONet on a tuple batch: branch rows (B x m) and trunk
// rows (B x dim) -> predictions (B).
ad::VarId deeponet_forward_t(ad::Tape& t, const nn::MlpVars& branch, const nn::MlpVars& trunk,
                             ad::VarId U, ad::VarId X);

// Naive variant: branch latent row (2q) for one function against the shared
// trunk latents (p x q) -> (lo, hi) predictions of length p.
nn::PredPair naive_combine_t(ad::Tape& t, ad::VarId branch_latent_row, ad::VarId trunk_lat,
                             const nn::DenseVars& head, ad::VarId interleave);

// Interleaving matrix E (q x 2q): tau -> [tau_1, tau_1, tau_2, tau_2, ...].
Tensor interleave_matrix(std::size_t q);

// Bound-propagated variant: branch latent bounds (q vectors) for one function
// against trunk latents, sign-split combination -> length-p bounds.
nn::PredPair bounded_combine_t(ad::Tape& t, inn::VarPair branch_bounds, ad::VarId trunk_lat);

// INN variant: interval multiplication layer then the interval dense head.
nn::PredPair inn_combine_t(ad::Tape& t, inn::VarPair branch_bounds, ad::VarId trunk_lat,
                           const inn::InnLayerVars& head);

std::vector<Tensor*> collect_params(DeepONet& net);
std::vector<Tensor*> collect_params(NaiveIntervalDeepONet& net);
std::vector<Tensor*> collect_params(InnDeepONet& net);

}  // namespace ivp::onet
