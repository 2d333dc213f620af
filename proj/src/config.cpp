// Copyright 2026 The seglab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "seglab/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "seglab/hash.hpp"
#include "seglab/schedule.hpp"

namespace seglab {
namespace {

/// Strict object reader: tracks consumed keys so leftovers can be rejected.
class Reader {
 public:
  Reader(const Json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected an object");
  }

  const Json& at(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError(ctx_ + ": missing key '" + key + "'");
    seen_.insert(key);
    return *it;
  }

  template <typename T>
  T get(const std::string& key) {
    const Json& v = at(key);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(ctx_ + "." + key + ": wrong type");
    }
  }

  std::string path(const std::string& key) const { return ctx_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(ctx_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const Json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

Json size_json(Size2 s) { return Json::array({s.height, s.width}); }

Size2 size_from(const Json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw ConfigError(ctx + ": expected [height, width]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::ce: return "ce";
    case LossKind::wce: return "wce";
    case LossKind::soft_miou: return "soft_miou";
    case LossKind::soft_dice: return "soft_dice";
  }
  return "ce";
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "ce") return LossKind::ce;
  if (s == "wce") return LossKind::wce;
  if (s == "soft_miou") return LossKind::soft_miou;
  if (s == "soft_dice") return LossKind::soft_dice;
  throw ConfigError("unknown loss kind '" + s + "'");
}

std::string to_string(EnsembleStrategy s) {
  switch (s) {
    case EnsembleStrategy::single: return "single";
    case EnsembleStrategy::flipped: return "flipped";
    case EnsembleStrategy::multiscale_flipped: return "multiscale_flipped";
  }
  return "single";
}

std::string to_string(VoteMode v) { return v == VoteMode::hard ? "hard" : "soft"; }

EnsembleStrategy parse_strategy(const std::string& s) {
  if (s == "single") return EnsembleStrategy::single;
  if (s == "flipped") return EnsembleStrategy::flipped;
  if (s == "multiscale_flipped" || s == "msflip") return EnsembleStrategy::multiscale_flipped;
  throw ConfigError("unknown ensemble strategy '" + s + "'");
}

VoteMode parse_vote_mode(const std::string& s) {
  if (s == "hard") return VoteMode::hard;
  if (s == "soft") return VoteMode::soft;
  throw ConfigError("unknown vote mode '" + s + "'");
}

bool LossConfig::uses(LossKind k) const {
  return std::any_of(terms.begin(), terms.end(), [&](const LossTerm& t) { return t.kind == k; });
}

void LossConfig::validate() const {
  if (terms.empty()) throw ConfigError("loss: at least one term required");
  for (const auto& t : terms)
    if (!(t.weight >= 0)) throw ConfigError("loss: term weights must be non-negative");
  if (!(epsilon > 0)) throw ConfigError("loss: epsilon must be positive");
  if (class_weights)
    for (double w : *class_weights)
      if (!(w > 0)) throw ConfigError("loss: class weights must be positive");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (stages.empty()) throw ConfigError("train: at least one stage required");
  long sum = 0;
  for (const auto& s : stages) {
    if (s.iterations < 1) throw ConfigError("train: stage iterations must be >= 1");
    s.loss.validate();
    sum += s.iterations;
  }
  if (sum != max_iterations)
    throw ConfigError("train: stage iterations sum to " + std::to_string(sum) + " but max_iterations is " +
                      std::to_string(max_iterations));
  if (val_every < 1 || checkpoint_every < 1) throw ConfigError("train: val_every and checkpoint_every must be >= 1");
  if (!(optimizer.lr > 0)) throw ConfigError("train: optimizer lr must be positive");
  if (optimizer.kind == OptimizerKind::sgd && (optimizer.warmup_iters < 0 || optimizer.warmup_iters >= max_iterations))
    throw ConfigError("train: warmup_iters must be in [0, max_iterations)");
  if (smoothing_window < 1) throw ConfigError("train: smoothing_window must be >= 1");
}

void EnsembleConfig::validate() const {
  if (native.height <= 0 || native.width <= 0) throw ConfigError("ensemble: native size must be positive");
  if (strategy == EnsembleStrategy::multiscale_flipped && scales.empty())
    throw ConfigError("ensemble: multiscale strategy needs at least one scale");
  for (const auto& s : scales)
    if (s.height <= 0 || s.width <= 0) throw ConfigError("ensemble: scales must be positive");
}

void HypothesisConfig::validate() const {
  arch.validate();
  augment.validate();
  train.validate();
  ensemble.validate();
  for (const auto& s : train.stages)
    if (s.loss.class_weights && static_cast<int>(s.loss.class_weights->size()) != arch.num_classes)
      throw ConfigError("loss: class_weights length differs from num_classes");
}

Json to_json(const ArchSpec& a) {
  return {{"family", to_string(a.family)},
          {"encoder", a.encoder},
          {"output_stride", a.output_stride},
          {"max_pool_in_stem", a.max_pool_in_stem},
          {"hlfe", a.hlfe},
          {"decoder_upsampling", to_string(a.decoder_upsampling)},
          {"num_classes", a.num_classes},
          {"width_multiplier", a.width_multiplier},
          {"encoder_weights", a.encoder_weights}};
}

Json to_json(const AugmentConfig& a) {
  return {{"crop_size", size_json(a.crop_size)},
          {"resize_scale_range", Json::array({a.resize_low, a.resize_high})},
          {"color", {{"grayscale_prob", a.color.grayscale_prob}, {"jitter_strength", a.color.jitter_strength}}},
          {"geom_rtk",
           {{"enabled", a.geom_rtk.enabled},
            {"perspective_magnitude", a.geom_rtk.perspective_magnitude},
            {"hflip_prob", a.geom_rtk.hflip_prob}}},
          {"cutmix_prob", a.cutmix_prob},
          {"hflip_prob", a.hflip_prob},
          {"pipeline", a.pipeline}};
}

Json to_json(const LossConfig& l) {
  Json terms = Json::array();
  for (const auto& t : l.terms) terms.push_back({{"kind", to_string(t.kind)}, {"weight", t.weight}});
  return {{"terms", terms},
          {"class_weights", l.class_weights ? Json(*l.class_weights) : Json(nullptr)},
          {"epsilon", l.epsilon}};
}

Json to_json(const TrainConfig& t) {
  Json stages = Json::array();
  for (const auto& s : t.stages) stages.push_back({{"loss", to_json(s.loss)}, {"iterations", s.iterations}});
  const auto& o = t.optimizer;
  return {{"optimizer",
           {{"kind", o.kind == OptimizerKind::adam ? "adam" : "sgd"},
            {"lr", o.lr},
            {"momentum", o.momentum},
            {"weight_decay", o.weight_decay},
            {"warmup_iters", o.warmup_iters},
            {"poly_power", o.poly_power}}},
          {"batch_size", t.batch_size},
          {"max_iterations", t.max_iterations},
          {"stages", stages},
          {"val_every", t.val_every},
          {"checkpoint_every", t.checkpoint_every},
          {"seed", t.seed},
          {"smoothing_window", t.smoothing_window},
          {"miou_exclude_background", t.miou_exclude_background}};
}

Json to_json(const EnsembleConfig& e) {
  Json scales = Json::array();
  for (const auto& s : e.scales) scales.push_back(size_json(s));
  return {{"strategy", to_string(e.strategy)},
          {"scales", scales},
          {"native", size_json(e.native)},
          {"vote_mode", to_string(e.vote_mode)}};
}

Json to_json(const HypothesisConfig& h) {
  return {{"arch", to_json(h.arch)},
          {"augment", to_json(h.augment)},
          {"train", to_json(h.train)},
          {"ensemble", to_json(h.ensemble)}};
}

ArchSpec arch_from_json(const Json& j) {
  Reader r(j, "arch");
  ArchSpec a;
  a.family = parse_family(r.get<std::string>("family"));
  a.encoder = r.get<std::string>("encoder");
  a.output_stride = r.get<int>("output_stride");
  a.max_pool_in_stem = r.get<bool>("max_pool_in_stem");
  a.hlfe = r.get<bool>("hlfe");
  a.decoder_upsampling = parse_upsampling(r.get<std::string>("decoder_upsampling"));
  a.num_classes = r.get<int>("num_classes");
  a.width_multiplier = r.get<double>("width_multiplier");
  a.encoder_weights = r.get<std::string>("encoder_weights");
  r.finish();
  return a;
}

AugmentConfig augment_from_json(const Json& j) {
  Reader r(j, "augment");
  AugmentConfig a;
  a.crop_size = size_from(r.at("crop_size"), r.path("crop_size"));
  const Json& range = r.at("resize_scale_range");
  if (!range.is_array() || range.size() != 2) throw ConfigError("augment.resize_scale_range: expected [low, high]");
  a.resize_low = range[0].get<double>();
  a.resize_high = range[1].get<double>();
  {
    Reader c(r.at("color"), "augment.color");
    a.color.grayscale_prob = c.get<double>("grayscale_prob");
    a.color.jitter_strength = c.get<double>("jitter_strength");
    c.finish();
  }
  {
    Reader g(r.at("geom_rtk"), "augment.geom_rtk");
    a.geom_rtk.enabled = g.get<bool>("enabled");
    a.geom_rtk.perspective_magnitude = g.get<double>("perspective_magnitude");
    a.geom_rtk.hflip_prob = g.get<double>("hflip_prob");
    g.finish();
  }
  a.cutmix_prob = r.get<double>("cutmix_prob");
  a.hflip_prob = r.get<double>("hflip_prob");
  a.pipeline = r.get<std::vector<std::string>>("pipeline");
  r.finish();
  return a;
}

LossConfig loss_from_json(const Json& j) {
  Reader r(j, "loss");
  LossConfig l;
  l.terms.clear();
  const Json& terms = r.at("terms");
  if (!terms.is_array()) throw ConfigError("loss.terms: expected an array");
  for (const auto& t : terms) {
    Reader tr(t, "loss.terms[]");
    l.terms.push_back({parse_loss_kind(tr.get<std::string>("kind")), tr.get<double>("weight")});
    tr.finish();
  }
  const Json& cw = r.at("class_weights");
  if (!cw.is_null()) l.class_weights = cw.get<std::vector<double>>();
  l.epsilon = r.get<double>("epsilon");
  r.finish();
  return l;
}

TrainConfig train_from_json(const Json& j) {
  Reader r(j, "train");
  TrainConfig t;
  {
    Reader o(r.at("optimizer"), "train.optimizer");
    const auto kind = o.get<std::string>("kind");
    if (kind == "adam") t.optimizer.kind = OptimizerKind::adam;
    else if (kind == "sgd") t.optimizer.kind = OptimizerKind::sgd;
    else throw ConfigError("train.optimizer.kind: expected adam or sgd");
    t.optimizer.lr = o.get<double>("lr");
    t.optimizer.momentum = o.get<double>("momentum");
    t.optimizer.weight_decay = o.get<double>("weight_decay");
    t.optimizer.warmup_iters = o.get<long>("warmup_iters");
    t.optimizer.poly_power = o.get<double>("poly_power");
    o.finish();
  }
  t.batch_size = r.get<int>("batch_size");
  t.max_iterations = r.get<long>("max_iterations");
  const Json& stages = r.at("stages");
  if (!stages.is_array()) throw ConfigError("train.stages: expected an array");
  for (const auto& s : stages) {
    Reader sr(s, "train.stages[]");
    StageConfig st;
    st.loss = loss_from_json(sr.at("loss"));
    st.iterations = sr.get<long>("iterations");
    sr.finish();
    t.stages.push_back(st);
  }
  t.val_every = r.get<long>("val_every");
  t.checkpoint_every = r.get<long>("checkpoint_every");
  t.seed = r.get<std::uint64_t>("seed");
  t.smoothing_window = r.get<int>("smoothing_window");
  t.miou_exclude_background = r.get<bool>("miou_exclude_background");
  r.finish();
  return t;
}

EnsembleConfig ensemble_from_json(const Json& j) {
  Reader r(j, "ensemble");
  EnsembleConfig e;
  e.strategy = parse_strategy(r.get<std::string>("strategy"));
  const Json& scales = r.at("scales");
  if (!scales.is_array()) throw ConfigError("ensemble.scales: expected an array");
  for (const auto& s : scales) e.scales.push_back(size_from(s, "ensemble.scales[]"));
  e.native = size_from(r.at("native"), "ensemble.native");
  e.vote_mode = parse_vote_mode(r.get<std::string>("vote_mode"));
  r.finish();
  return e;
}

HypothesisConfig hypothesis_from_json(const Json& j) {
  Reader r(j, "config");
  HypothesisConfig h;
  h.arch = arch_from_json(r.at("arch"));
  h.augment = augment_from_json(r.at("augment"));
  h.train = train_from_json(r.at("train"));
  h.ensemble = ensemble_from_json(r.at("ensemble"));
  r.finish();
  return h;
}

Json merge_patch_strict(const Json& base, const Json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("patch" + (path.empty() ? std::string() : " at '" + path + "'") + " must be an object");
  Json out = base;
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
    if (!base.is_object() || !base.contains(it.key())) throw ConfigError("patch: unknown key '" + key_path + "'");
    const Json& b = base.at(it.key());
    if (b.is_object() && it.value().is_object()) out[it.key()] = merge_patch_strict(b, it.value(), key_path);
    else out[it.key()] = it.value();
  }
  return out;
}

HypothesisConfig resolve(const HypothesisConfig& base, const Json& patch) {
  if (patch.is_null() || (patch.is_object() && patch.empty())) return base;
  HypothesisConfig out = hypothesis_from_json(merge_patch_strict(to_json(base), patch));
  out.validate();
  return out;
}

std::string config_hash(const HypothesisConfig& h) { return fnv1a_hex(to_json(h).dump()); }

double lr_at(const TrainConfig& cfg, long iteration) {
  const auto& o = cfg.optimizer;
  if (o.kind == OptimizerKind::adam) return o.lr;
  const long it = std::clamp(iteration, 0L, cfg.max_iterations);
  if (it < o.warmup_iters) return o.lr * static_cast<double>(it) / static_cast<double>(o.warmup_iters);
  const double span = static_cast<double>(cfg.max_iterations - o.warmup_iters);
  const double progress = span > 0 ? static_cast<double>(it - o.warmup_iters) / span : 1.0;
  return o.lr * std::pow(std::max(0.0, 1.0 - progress), o.poly_power);
}

TrainConfig scale_iterations(const TrainConfig& cfg, double scale) {
  if (!(scale > 0)) throw ConfigError("iteration scale must be positive");
  auto shrink = [&](long v) { return std::max(1L, static_cast<long>(std::lround(static_cast<double>(v) * scale))); };
  TrainConfig out = cfg;
  out.max_iterations = 0;
  for (auto& s : out.stages) {
    s.iterations = shrink(s.iterations);
    out.max_iterations += s.iterations;
  }
  out.val_every = shrink(cfg.val_every);
  out.checkpoint_every = shrink(cfg.checkpoint_every);
  if (cfg.optimizer.warmup_iters > 0)
    out.optimizer.warmup_iters = std::min(shrink(cfg.optimizer.warmup_iters), out.max_iterations - 1);
  return out;
}

std::size_t stage_at(const TrainConfig& cfg, long iteration) {
  long start = 0;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    start += cfg.stages[s].iterations;
    if (iteration < start) return s;
  }
  return cfg.stages.empty() ? 0 : cfg.stages.size() - 1;
}

}  // namespace seglab
