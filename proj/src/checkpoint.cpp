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

#include "seglab/checkpoint.hpp"

namespace seglab {
namespace {

constexpr const char* kFormat = "seglab-checkpoint";
constexpr int kVersion = 1;

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint '" + path.string() + "' not found");
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw IoError("cannot read checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
  return ar;
}

CheckpointMeta meta_from_archive(torch::serialize::InputArchive& ar, const std::filesystem::path& path) {
  c10::IValue v;
  if (!ar.try_read("meta", v) || !v.isString()) throw IoError("'" + path.string() + "' is not a seglab checkpoint");
  Json j;
  try {
    j = Json::parse(v.toStringRef());
  } catch (const Json::exception&) {
    throw IoError("corrupt checkpoint metadata in '" + path.string() + "'");
  }
  if (j.value("format", "") != kFormat) throw IoError("'" + path.string() + "' is not a seglab checkpoint");
  if (j.value("version", 0) != kVersion)
    throw IoError("checkpoint '" + path.string() + "' has unsupported version " + std::to_string(j.value("version", 0)));
  return checkpoint_meta_from_json(j);
}

}  // namespace

Json to_json(const CheckpointMeta& m) {
  Json hist = Json::array(), loss = Json::array();
  for (const auto& [it, v] : m.history) hist.push_back({it, v});
  for (const auto& [it, v] : m.train_loss) loss.push_back({it, v});
  return {{"format", kFormat},
          {"version", kVersion},
          {"config", to_json(m.config)},
          {"dataset", m.dataset},
          {"iteration", m.iteration},
          {"rng_state", m.rng_state},
          {"history", hist},
          {"train_loss", loss},
          {"best_miou", m.best_miou},
          {"best_iteration", m.best_iteration},
          {"class_weights", m.class_weights}};
}

CheckpointMeta checkpoint_meta_from_json(const Json& j) {
  CheckpointMeta m;
  try {
    m.config = hypothesis_from_json(j.at("config"));
    m.dataset = j.at("dataset");
    m.iteration = j.at("iteration").get<long>();
    m.rng_state = j.at("rng_state").get<std::string>();
    for (const auto& e : j.at("history")) m.history.emplace_back(e[0].get<long>(), e[1].get<double>());
    for (const auto& e : j.at("train_loss")) m.train_loss.emplace_back(e[0].get<long>(), e[1].get<double>());
    m.best_miou = j.at("best_miou").get<double>();
    m.best_iteration = j.at("best_iteration").get<long>();
    m.class_weights = j.at("class_weights").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, torch::optim::Optimizer* optimizer,
                     const CheckpointMeta& meta) {
  torch::serialize::OutputArchive ar;
  ar.write("meta", c10::IValue(to_json(meta).dump()));
  torch::serialize::OutputArchive model_ar;
  model.module().save(model_ar);
  ar.write("model", model_ar);
  if (optimizer) {
    torch::serialize::OutputArchive opt_ar;
    optimizer->save(opt_ar);
    ar.write("optimizer", opt_ar);
  }
  const auto tmp = path.string() + ".tmp";
  try {
    ar.save_to(tmp);
  } catch (const c10::Error& e) {
    throw IoError("cannot write checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write checkpoint '" + path.string() + "': " + ec.message());
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  auto ar = open_archive(path);
  return meta_from_archive(ar, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  auto ar = open_archive(path);
  auto meta = meta_from_archive(ar, path);
  ArchSpec arch = meta.config.arch;
  arch.encoder_weights.clear();  // parameters come from the checkpoint itself
  Model model = build_model(arch, meta.config.train.seed);
  torch::serialize::InputArchive model_ar;
  if (!ar.try_read("model", model_ar)) throw IoError("checkpoint '" + path.string() + "' has no model section");
  try {
    model.module().load(model_ar);
  } catch (const c10::Error& e) {
    throw IncompatibleCheckpoint("checkpoint '" + path.string() + "' does not match its ArchSpec: " + e.what_without_backtrace());
  }
  return {std::move(meta), model};
}

void load_optimizer_state(const std::filesystem::path& path, torch::optim::Optimizer& optimizer) {
  auto ar = open_archive(path);
  torch::serialize::InputArchive opt_ar;
  if (!ar.try_read("optimizer", opt_ar)) throw IoError("checkpoint '" + path.string() + "' has no optimizer state");
  optimizer.load(opt_ar);
}

}  // namespace seglab
