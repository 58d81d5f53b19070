#pragma once

// One-Step and Two-Step DCCA fusion of text, audio and video views, plus the
// raw-concatenation baselines.
//
// One-Step:  v1 = text, v2 = [audio|video]; (c1, c2) = DCCA(v1, v2);
//            output [c1 | v1 | c2 | v2].
// Two-Step:  (c1, c2) = DCCA(first pair); v1' = [c1|c2], v2' = third view;
//            (c1', c2') = DCCA(v1', v2'); output [c1' | v1' | c2' | v2'].
//
// Every DCCA step is trained on train rows only (validation rows steer early
// stopping and grid selection) and then applied to all rows.

#include "mmfuse/dcca.hpp"
#include "mmfuse/embedding.hpp"
#include "mmfuse/views.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mmfuse {

inline const std::string kText = "text";
inline const std::string kAudio = "audio";
inline const std::string kVideo = "video";

struct TwoStepOrder {
  std::string first_a;
  std::string first_b;
  std::string third;

  /// Short form such as "av-t": first pair letters, dash, third letter.
  std::string code() const {
    return std::string{first_a.front(), first_b.front(), '-', third.front()};
  }

  void validate() const {
    const std::array<std::string, 3> got{first_a, first_b, third};
    for (const auto& v : got)
      if (v != kText && v != kAudio && v != kVideo) throw ConfigError("two-step order: unknown view '" + v + "'");
    if (first_a == first_b || first_a == third || first_b == third)
      throw ConfigError("two-step order must use text, audio and video exactly once");
  }
};

inline TwoStepOrder parse_two_step_order(std::string_view code) {
  auto view_of = [&](char c) -> std::string {
    switch (c) {
      case 't': return kText;
      case 'a': return kAudio;
      case 'v': return kVideo;
    }
    throw ConfigError("two-step order '" + std::string(code) + "': unknown view letter");
  };
  if (code.size() != 4 || code[2] != '-') throw ConfigError("two-step order must look like 'av-t'");
  TwoStepOrder o{view_of(code[0]), view_of(code[1]), view_of(code[3])};
  o.validate();
  return o;
}

/// The three orderings in table order: (a,v)->t, (t,v)->a, (t,a)->v.
inline std::array<TwoStepOrder, 3> two_step_orders() {
  return {TwoStepOrder{kAudio, kVideo, kText}, TwoStepOrder{kText, kVideo, kAudio},
          TwoStepOrder{kText, kAudio, kVideo}};
}

struct DccaStep {
  DccaModel model;
  TrainConfig config;  // configuration of the selected grid candidate
  std::vector<double> candidate_scores;
};

struct OneStepResult {
  FusedEmbedding embedding;
  DccaStep step;
};

struct TwoStepResult {
  FusedEmbedding embedding;
  DccaStep step1;
  DccaStep step2;
};

namespace detail {

inline void require_tri_modal(const ViewBundle& b) {
  for (const auto& v : {kText, kAudio, kVideo})
    if (!b.has_view(v)) throw ConfigError("fusion needs a '" + v + "' view");
}

inline std::string config_hash(const TrainConfig& cfg, const std::string& extra) {
  return hex64(fnv1a(cfg.canonical() + "|" + extra));
}

/// Trains one DCCA step (through the grid) with the bottleneck rule
/// k <= min(d1, d2) enforced against the step's input widths.
inline DccaStep run_dcca_step(const Matrix& v1, const Matrix& v2, const std::vector<Split>& splits, TrainConfig cfg,
                              Index k, const std::string& step_name) {
  if (k < 1) throw ConfigError(step_name + ": k must be at least 1");
  if (k > std::min(v1.cols(), v2.cols()))
    throw ConfigError(step_name + ": k=" + std::to_string(k) + " exceeds min branch dimension " +
                      std::to_string(std::min(v1.cols(), v2.cols())));
  cfg.k = k;
  cfg.seed = derive_seed(cfg.seed, step_name);
  auto r = grid_search_dcca(v1, v2, splits, cfg);
  return {std::move(r.model), std::move(r.config), std::move(r.candidate_scores)};
}

inline Matrix hcat(std::initializer_list<const Matrix*> parts) {
  Index rows = (*parts.begin())->rows(), cols = 0;
  for (const auto* p : parts) cols += p->cols();
  Matrix out(rows, cols);
  Index c = 0;
  for (const auto* p : parts) {
    out.middleCols(c, p->cols()) = *p;
    c += p->cols();
  }
  return out;
}

}  // namespace detail

inline OneStepResult one_step_fuse(const ViewBundle& bundle, const TrainConfig& cfg) {
  detail::require_tri_modal(bundle);
  const FeatureMatrix& text = bundle.view(kText);
  const FeatureMatrix av = concat_views(bundle.view(kAudio), bundle.view(kVideo));

  DccaStep step = detail::run_dcca_step(text.data(), av.data(), bundle.splits(), cfg, cfg.k, "fusion.one_step");
  const auto [c1, c2] = dcca_transform(step.model, text.data(), av.data());

  Provenance prov;
  prov.algorithm = FusionAlgorithm::OneStep;
  prov.view_order = {kText, kAudio, kVideo};
  prov.view_dims = {text.cols(), bundle.view(kAudio).cols(), bundle.view(kVideo).cols()};
  prov.k_values = {cfg.k};
  prov.config_hash = detail::config_hash(cfg, "one-step");
  Matrix fused = detail::hcat({&c1, &text.data(), &c2, &av.data()});
  return {FusedEmbedding(std::move(fused), bundle.ids(), std::move(prov)), std::move(step)};
}

/// k1 and k2 default to cfg.k.
inline TwoStepResult two_step_fuse(const ViewBundle& bundle, const TwoStepOrder& order, const TrainConfig& cfg,
                                   std::optional<Index> k1 = std::nullopt, std::optional<Index> k2 = std::nullopt) {
  order.validate();
  detail::require_tri_modal(bundle);
  const Index k_first = k1.value_or(cfg.k);
  const Index k_second = k2.value_or(cfg.k);
  const FeatureMatrix& a = bundle.view(order.first_a);
  const FeatureMatrix& b = bundle.view(order.first_b);
  const FeatureMatrix& third = bundle.view(order.third);
  const std::string tag = "fusion.two_step." + order.code();

  DccaStep step1 = detail::run_dcca_step(a.data(), b.data(), bundle.splits(), cfg, k_first, tag + ".step1");
  const auto [c1, c2] = dcca_transform(step1.model, a.data(), b.data());
  const Matrix first = detail::hcat({&c1, &c2});

  DccaStep step2 = detail::run_dcca_step(first, third.data(), bundle.splits(), cfg, k_second, tag + ".step2");
  const auto [d1, d2] = dcca_transform(step2.model, first, third.data());

  Provenance prov;
  prov.algorithm = FusionAlgorithm::TwoStep;
  prov.view_order = {order.first_a, order.first_b, order.third};
  prov.view_dims = {a.cols(), b.cols(), third.cols()};
  prov.k_values = {k_first, k_second};
  prov.config_hash =
      detail::config_hash(cfg, "two-step " + order.code() + " " + std::to_string(k_first) + "," + std::to_string(k_second));
  Matrix fused = detail::hcat({&d1, &first, &d2, &third.data()});
  return {FusedEmbedding(std::move(fused), bundle.ids(), std::move(prov)), std::move(step1), std::move(step2)};
}

/// Plain horizontal concatenation of the named raw views, in the given order.
inline FusedEmbedding baseline_fuse(const ViewBundle& bundle, const std::vector<std::string>& subset,
                                    FusionAlgorithm method = FusionAlgorithm::Concat) {
  if (subset.empty()) throw ConfigError("baseline_fuse: empty view subset");
  if (method != FusionAlgorithm::Concat && method != FusionAlgorithm::Unimodal)
    throw ConfigError("baseline_fuse: method must be concat or unimodal");
  if (method == FusionAlgorithm::Unimodal && subset.size() != 1)
    throw ConfigError("baseline_fuse: unimodal takes exactly one view");
  Provenance prov;
  prov.algorithm = method;
  std::vector<const Matrix*> parts;
  Index width = 0;
  for (const auto& name : subset) {
    const auto& v = bundle.view(name);
    parts.push_back(&v.data());
    prov.view_order.push_back(name);
    prov.view_dims.push_back(v.cols());
    width += v.cols();
  }
  Matrix out(bundle.size(), width);
  Index c = 0;
  for (const auto* p : parts) {
    out.middleCols(c, p->cols()) = *p;
    c += p->cols();
  }
  prov.config_hash = hex64(fnv1a(std::string(to_string(method)) + "|" + detail::join(subset)));
  return {std::move(out), bundle.ids(), std::move(prov)};
}

}  // namespace mmfuse
