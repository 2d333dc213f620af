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

#include "seglab/pisss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "seglab/hash.hpp"

namespace seglab {
namespace {

std::string format_score(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string display_cell(const Json& display, const std::string& key) {
  if (!display.contains(key)) return "";
  const auto& v = display.at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

Json outcome_json(const HypothesisOutcome& o) {
  return {{"ok", o.ok},
          {"score", o.ok ? Json(o.score) : Json(nullptr)},
          {"error", o.error},
          {"details", o.details}};
}

HypothesisOutcome outcome_from_json(const Json& j) {
  HypothesisOutcome o;
  o.ok = j.at("ok").get<bool>();
  if (o.ok) o.score = j.at("score").get<double>();
  o.error = j.at("error").get<std::string>();
  o.details = j.at("details");
  return o;
}

// Keys of `display` objects in first-appearance order.
std::vector<std::string> display_columns(const std::vector<const ExperimentRecord*>& exps) {
  std::vector<std::string> cols;
  for (const auto* e : exps)
    for (const auto& r : e->results)
      for (const auto& [k, v] : r.display.items())
        if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  return cols;
}

std::string encoder_label(const std::string& name, bool short_form) {
  static const std::map<std::string, std::string> families = {
      {"resnet", "ResNet-"}, {"res2net", "Res2Net-"}, {"resnext", "ResNeXt-"}, {"resnest", "ResNeSt-"}};
  const auto last = name.find_last_not_of("0123456789");
  if (last == std::string::npos || last + 1 == name.size()) return name;
  const auto digits = last + 1;
  const auto it = families.find(name.substr(0, digits));
  if (it == families.end()) return name;
  if (short_form && it->first == "resnet") return "R" + name.substr(digits);
  return it->second + name.substr(digits);
}

std::string loss_label(const std::string& kind) {
  if (kind == "ce") return "CE";
  if (kind == "wce") return "WCE";
  if (kind == "soft_miou") return "mIoU";
  if (kind == "soft_dice") return "dice";
  return kind;
}

std::string percent(double p) { return std::to_string(static_cast<int>(std::lround(100.0 * p))); }

}  // namespace

const std::vector<std::string>& display_fields() {
  static const std::vector<std::string> fields = {"arch",   "encoder", "encoder_short", "os",  "wo_mp",
                                                  "iters",  "losses",  "aug",           "convt", "hlfe",
                                                  "cutmix", "sgd",     "optimizer",     "strategy"};
  return fields;
}

std::string describe_config(const Json& c, const std::string& field) {
  const Json& arch = c.at("arch");
  const bool dl3 = arch.at("family").get<std::string>() == "deeplabv3plus";
  const Json& aug = c.at("augment");
  const auto pipeline = aug.at("pipeline").get<std::vector<std::string>>();
  const bool has_cutmix = std::find(pipeline.begin(), pipeline.end(), "cutmix") != pipeline.end();
  const std::string optimizer = c.at("train").at("optimizer").at("kind").get<std::string>();
  if (field == "arch") return dl3 ? "DL3+" : "U-Net";
  if (field == "encoder") return encoder_label(arch.at("encoder").get<std::string>(), false);
  if (field == "encoder_short") return encoder_label(arch.at("encoder").get<std::string>(), true);
  if (field == "os") return dl3 ? std::to_string(arch.at("output_stride").get<int>()) : "-";
  if (field == "wo_mp") return arch.at("max_pool_in_stem").get<bool>() ? "-" : "yes";
  if (field == "convt") return arch.at("decoder_upsampling").get<std::string>() == "transposed_conv" ? "yes" : "-";
  if (field == "hlfe") return arch.at("hlfe").get<bool>() ? "yes" : "-";
  if (field == "iters") {
    const long n = c.at("train").at("max_iterations").get<long>();
    return n % 1000 == 0 ? std::to_string(n / 1000) + "k" : std::to_string(n);
  }
  if (field == "losses") {
    std::string out;
    for (const auto& st : c.at("train").at("stages"))
      for (const auto& t : st.at("loss").at("terms")) out += (out.empty() ? "" : "+") + loss_label(t.at("kind").get<std::string>());
    return out;
  }
  if (field == "aug") {
    std::string out;
    for (const auto& op : pipeline) {
      std::string name = op == "crop"       ? "Crop"
                         : op == "resize"   ? "Resizing"
                         : op == "color"    ? "Color"
                         : op == "geom_rtk" ? "GeomRTK"
                         : op == "hflip"    ? "Flip"
                         : op == "cutmix"   ? "Cutmix" + percent(aug.at("cutmix_prob").get<double>())
                                            : op;
      out += (out.empty() ? "" : "+") + name;
    }
    return out.empty() ? "None" : out;
  }
  if (field == "cutmix") {
    if (!has_cutmix) return "-";
    const bool crop = std::find(pipeline.begin(), pipeline.end(), "crop") != pipeline.end();
    return percent(aug.at("cutmix_prob").get<double>()) + (crop ? "%" : "% w/o crop");
  }
  if (field == "sgd") return optimizer == "sgd" ? "yes" : "-";
  if (field == "optimizer") return optimizer == "sgd" ? "SGD" : "Adam";
  if (field == "strategy") {
    const auto s = c.at("ensemble").at("strategy").get<std::string>();
    if (s == "single") return "Single Prediction";
    if (s == "flipped") return "Flipped";
    return "MultiScale+Flipped";
  }
  throw ConfigError("unknown display field '" + field + "'");
}

Json render_display(const Json& display, const Json& config) {
  Json out = display;
  for (auto& [k, v] : out.items())
    if (v.is_string() && !v.get<std::string>().empty() && v.get<std::string>()[0] == '=')
      v = describe_config(config, v.get<std::string>().substr(1));
  return out;
}

std::string to_string(Category c) {
  switch (c) {
    case Category::B: return "B";
    case Category::P: return "P";
    case Category::T: return "T";
    case Category::A: return "A";
  }
  return "?";
}

Category parse_category(const std::string& s) {
  if (s == "B") return Category::B;
  if (s == "P") return Category::P;
  if (s == "T") return Category::T;
  if (s == "A") return Category::A;
  throw ConfigError("unknown experiment category '" + s + "' (expected B, P, T or A)");
}

void Experiment::validate() const {
  if (name.empty()) throw ConfigError("experiment without a name");
  if (hypotheses.empty()) throw ConfigError("experiment '" + name + "' has no hypotheses");
  std::set<std::string> labels;
  for (const auto& h : hypotheses)
    if (!labels.insert(h.label).second)
      throw ConfigError("experiment '" + name + "' lists hypothesis '" + h.label + "' twice");
  if (pin && !labels.count(*pin))
    throw ConfigError("experiment '" + name + "' pins unknown hypothesis '" + *pin + "'");
}

Plan plan_from_json(const Json& j) {
  Plan p;
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kPlanSchemaVersion)
      throw ConfigError("plan schema_version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kPlanSchemaVersion) + ")");
    p.name = j.at("name").get<std::string>();
    p.initial_config = resolve(HypothesisConfig{}, j.at("initial_config"));
    p.initial_config.validate();
    p.dataset = j.value("dataset", Json());
    p.iteration_scale = j.value("iteration_scale", 1.0);
    if (j.contains("dry_run") && !j.at("dry_run").is_null()) {
      const auto& d = j.at("dry_run");
      p.dry_run = DryRun{d.at("fixture"), d.value("spatial_scale", 0.25), d.value("width_multiplier", 0.25),
                         d.value("batch_size", 0)};
    }
    const Json base = to_json(p.initial_config);
    for (const auto& ej : j.at("experiments")) {
      Experiment e;
      e.name = ej.at("name").get<std::string>();
      e.category = parse_category(ej.at("category").get<std::string>());
      e.part = ej.value("part", "");
      if (ej.contains("pin") && !ej.at("pin").is_null()) e.pin = ej.at("pin").get<std::string>();
      for (const auto& hj : ej.at("hypotheses")) {
        Hypothesis h;
        h.label = hj.at("label").get<std::string>();
        h.patch = hj.value("patch", Json::object());
        h.display = hj.value("display", Json::object());
        merge_patch_strict(base, h.patch, e.name + "/" + h.label + ":");
        for (const auto& [k, v] : h.display.items())
          if (v.is_string() && v.get<std::string>().rfind('=', 0) == 0 &&
              std::find(display_fields().begin(), display_fields().end(), v.get<std::string>().substr(1)) ==
                  display_fields().end())
            throw ConfigError("experiment '" + e.name + "': unknown display field '" + v.get<std::string>() + "'");
        e.hypotheses.push_back(std::move(h));
      }
      e.validate();
      p.experiments.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed plan: ") + e.what());
  }
  if (!(p.iteration_scale > 0)) throw ConfigError("plan iteration_scale must be positive");
  return p;
}

Plan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open plan '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("plan '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return plan_from_json(j);
}

Scoring scoring_for(Category c) { return c == Category::P ? Scoring::checkpoint : Scoring::smoothed_validation; }

std::string training_hash(const HypothesisConfig& h) {
  HypothesisConfig t = h;
  t.ensemble = EnsembleConfig{};
  return config_hash(t);
}

std::string Ledger::hash() const { return fnv1a_hex(to_json(*this).dump()); }

Ledger start_ledger(const Plan& plan) {
  Ledger l;
  l.plan_name = plan.name;
  l.iteration_scale = plan.iteration_scale;
  l.initial = plan.initial_config;
  l.best_so_far = plan.initial_config;
  return l;
}

std::optional<std::size_t> argmax_first(const std::vector<double>& scores) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i]) || scores[i] == -std::numeric_limits<double>::infinity()) continue;
    if (!best || scores[i] > scores[*best]) best = i;
  }
  return best;
}

void run_experiment(Ledger& ledger, const Experiment& experiment, HypothesisRunner& runner) {
  experiment.validate();
  const HypothesisConfig base = ledger.best_so_far;
  const Scoring scoring = scoring_for(experiment.category);
  auto memo = ledger.memo;

  ExperimentRecord rec;
  rec.name = experiment.name;
  rec.category = experiment.category;
  rec.part = experiment.part;
  rec.base_hash = config_hash(base);
  std::vector<HypothesisConfig> resolved;
  std::vector<double> scores;
  for (const auto& h : experiment.hypotheses) {
    HypothesisResult r{h.label, h.patch, h.display, "", {}, false};
    HypothesisConfig cfg = base;
    try {
      r.display = render_display(h.display, merge_patch_strict(to_json(base), h.patch));
      cfg = resolve(base, h.patch);
      r.config_hash = config_hash(cfg);
      const std::string key = scoring == Scoring::checkpoint
                                  ? "checkpoint:" + training_hash(base) + ":" + r.config_hash
                                  : "train:" + training_hash(cfg);
      if (auto it = memo.find(key); it != memo.end()) {
        r.outcome = it->second;
      } else {
        r.outcome = scoring == Scoring::checkpoint ? runner.evaluate(base, cfg) : runner.train(cfg);
        memo[key] = r.outcome;
      }
    } catch (const Error& e) {
      r.outcome = HypothesisOutcome{};
      r.outcome.error = e.what();
    }
    if (!r.outcome.ok) r.outcome.score = -std::numeric_limits<double>::infinity();
    scores.push_back(r.outcome.score);
    resolved.push_back(cfg);
    rec.results.push_back(std::move(r));
  }

  auto winner = argmax_first(scores);
  if (!winner) throw Error("experiment '" + experiment.name + "': every hypothesis failed");
  if (experiment.pin) {
    for (std::size_t i = 0; i < rec.results.size(); ++i)
      if (rec.results[i].label == *experiment.pin && rec.results[i].outcome.ok) {
        rec.pinned = i != *winner;
        winner = i;
      }
  }
  rec.winner = *winner;
  rec.results[*winner].winner = true;
  ledger.best_so_far = resolved[*winner];
  ledger.experiments.push_back(std::move(rec));
  ledger.memo = std::move(memo);
}

void run_plan(Ledger& ledger, const Plan& plan, HypothesisRunner& runner,
              const std::function<void(const Ledger&)>& after_each) {
  if (ledger.experiments.size() > plan.experiments.size())
    throw ConfigError("ledger holds more experiments than plan '" + plan.name + "'");
  for (std::size_t i = 0; i < ledger.experiments.size(); ++i)
    if (ledger.experiments[i].name != plan.experiments[i].name)
      throw ConfigError("ledger experiment " + std::to_string(i + 1) + " is '" + ledger.experiments[i].name +
                        "' but the plan lists '" + plan.experiments[i].name + "'");
  for (std::size_t i = ledger.experiments.size(); i < plan.experiments.size(); ++i) {
    run_experiment(ledger, plan.experiments[i], runner);
    if (after_each) after_each(ledger);
  }
}

HypothesisConfig replay(const Ledger& ledger) {
  HypothesisConfig cfg = ledger.initial;
  for (const auto& e : ledger.experiments) cfg = resolve(cfg, e.results.at(e.winner).patch);
  return cfg;
}

Json to_json(const Ledger& ledger) {
  Json exps = Json::array();
  for (const auto& e : ledger.experiments) {
    Json results = Json::array();
    for (const auto& r : e.results)
      results.push_back({{"label", r.label},
                         {"patch", r.patch},
                         {"display", r.display},
                         {"config_hash", r.config_hash},
                         {"outcome", outcome_json(r.outcome)},
                         {"winner", r.winner}});
    exps.push_back({{"name", e.name},
                    {"category", to_string(e.category)},
                    {"part", e.part},
                    {"base_hash", e.base_hash},
                    {"results", results},
                    {"winner", e.winner},
                    {"pinned", e.pinned}});
  }
  Json memo = Json::object();
  for (const auto& [k, v] : ledger.memo) memo[k] = outcome_json(v);
  return {{"schema_version", kPlanSchemaVersion},
          {"plan", ledger.plan_name},
          {"iteration_scale", ledger.iteration_scale},
          {"initial", to_json(ledger.initial)},
          {"best_so_far", to_json(ledger.best_so_far)},
          {"experiments", exps},
          {"memo", memo}};
}

Ledger ledger_from_json(const Json& j) {
  Ledger l;
  try {
    if (j.at("schema_version").get<int>() != kPlanSchemaVersion)
      throw ConfigError("ledger schema_version " + j.at("schema_version").dump() + " is not supported");
    l.plan_name = j.at("plan").get<std::string>();
    l.iteration_scale = j.at("iteration_scale").get<double>();
    l.initial = hypothesis_from_json(j.at("initial"));
    l.best_so_far = hypothesis_from_json(j.at("best_so_far"));
    for (const auto& ej : j.at("experiments")) {
      ExperimentRecord e;
      e.name = ej.at("name").get<std::string>();
      e.category = parse_category(ej.at("category").get<std::string>());
      e.part = ej.at("part").get<std::string>();
      e.base_hash = ej.at("base_hash").get<std::string>();
      e.winner = ej.at("winner").get<std::size_t>();
      e.pinned = ej.at("pinned").get<bool>();
      for (const auto& rj : ej.at("results")) {
        HypothesisResult r;
        r.label = rj.at("label").get<std::string>();
        r.patch = rj.at("patch");
        r.display = rj.at("display");
        r.config_hash = rj.at("config_hash").get<std::string>();
        r.outcome = outcome_from_json(rj.at("outcome"));
        r.winner = rj.at("winner").get<bool>();
        e.results.push_back(std::move(r));
      }
      if (e.winner >= e.results.size()) throw ConfigError("ledger experiment '" + e.name + "' has no winner row");
      l.experiments.push_back(std::move(e));
    }
    for (const auto& [k, v] : j.at("memo").items()) l.memo[k] = outcome_from_json(v);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed ledger: ") + e.what());
  }
  return l;
}

void save_ledger(const std::filesystem::path& path, const Ledger& ledger) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write ledger '" + path.string() + "'");
    out << to_json(ledger).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Ledger load_ledger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ledger '" + path.string() + "'");
  try {
    return ledger_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw ConfigError("ledger '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Report emit_report(const Ledger& ledger) {
  std::vector<const ExperimentRecord*> all;
  for (const auto& e : ledger.experiments) all.push_back(&e);
  const auto cols = display_columns(all);

  std::ostringstream csv;
  csv << "part,experiment,category,hypothesis,config_hash,status,score,winner";
  for (const auto& c : cols) csv << ',' << csv_field(c);
  csv << '\n';
  for (const auto* e : all)
    for (const auto& r : e->results) {
      csv << csv_field(e->part) << ',' << csv_field(e->name) << ',' << to_string(e->category) << ','
          << csv_field(r.label) << ',' << r.config_hash << ',' << (r.outcome.ok ? "ok" : "failed") << ','
          << (r.outcome.ok ? format_score(r.outcome.score) : "") << ',' << (r.winner ? "true" : "false");
      for (const auto& c : cols) csv << ',' << csv_field(display_cell(r.display, c));
      csv << '\n';
    }

  // Parts in first-appearance order.
  std::vector<std::string> parts;
  for (const auto* e : all)
    if (std::find(parts.begin(), parts.end(), e->part) == parts.end()) parts.push_back(e->part);

  std::ostringstream text;
  for (const auto& part : parts) {
    std::vector<const ExperimentRecord*> exps;
    for (const auto* e : all)
      if (e->part == part) exps.push_back(e);
    const auto pcols = display_columns(exps);
    std::vector<std::string> header{"Exp"};
    header.insert(header.end(), pcols.begin(), pcols.end());
    header.push_back("mIoU");
    header.push_back("Winner");
    std::vector<std::vector<std::string>> rows;
    for (const auto* e : exps)
      for (std::size_t i = 0; i < e->results.size(); ++i) {
        const auto& r = e->results[i];
        std::vector<std::string> row{i == 0 ? to_string(e->category) + ": " + e->name : ""};
        for (const auto& c : pcols) row.push_back(display_cell(r.display, c));
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", 100.0 * r.outcome.score);
        row.push_back(r.outcome.ok ? buf : "failed");
        row.push_back(r.winner ? (e->pinned ? "* (pinned)" : "*") : "");
        rows.push_back(std::move(row));
      }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      width[c] = header[c].size();
      for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    auto emit = [&](const std::vector<std::string>& row) {
      std::string line;
      for (std::size_t c = 0; c < row.size(); ++c) {
        line += row[c];
        if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      text << line << '\n';
    };
    text << (part.empty() ? ledger.plan_name : part) << '\n';
    emit(header);
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    text << std::string(total - 2, '-') << '\n';
    for (const auto& row : rows) emit(row);
    text << '\n';
  }
  return {csv.str(), text.str()};
}

std::vector<ReportRow> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("report CSV lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto ce = col("experiment"), ch = col("hypothesis"), cs = col("score"), cw = col("winner");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ConfigError("report CSV row has " + std::to_string(f.size()) + " fields");
    ReportRow r;
    r.experiment = f[ce];
    r.hypothesis = f[ch];
    if (!f[cs].empty()) r.score = std::stod(f[cs]);
    r.winner = f[cw] == "true";
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace seglab
