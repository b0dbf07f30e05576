// mpm: command-line entry point for data generation, training, evaluation
// and completion.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpm/data/dataset_io.hpp"
#include "mpm/data/split.hpp"
#include "mpm/data/synth.hpp"
#include "mpm/errors.hpp"
#include "mpm/infer/inference.hpp"
#include "mpm/infer/ratio_grid.hpp"
#include "mpm/log.hpp"
#include "mpm/net/checkpoint.hpp"
#include "mpm/train/evaluation.hpp"
#include "mpm/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mpm;

namespace {

// Options shared by every command. Unset optionals leave the config file (or
// the built-in default) in charge.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct TrainFlags {
  std::vector<std::string> data;
  std::string ckpt;
  std::string model;
  std::optional<int> stage;
  std::optional<int> seq_len;
  std::optional<int> rs;
  std::optional<double> rt;
  std::optional<std::string> strategy;
  std::optional<double> data_fraction;
  std::string mix;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<int> steps_per_epoch;
  std::optional<int> val_max_records;
  bool scratch = false;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataFormatError(DataErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

fs::path out_dir(const Common& c) {
  if (c.out.empty()) throw ValidationError("--out is required");
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw DataFormatError(DataErrorCode::kIo, "cannot create " + c.out + ": " + ec.message());
  return c.out;
}

// Layers built-in defaults, the config file and flags into one document.
json resolve(const json& defaults, const Common& c, const json& flags) {
  json cfg = defaults;
  if (!c.config_path.empty()) cfg.merge_patch(read_json_file(c.config_path));
  cfg.merge_patch(flags);
  if (c.seed) cfg["seed"] = *c.seed;
  return cfg;
}

void write_resolved(const fs::path& dir, const std::string& command, const json& cfg) {
  json doc = cfg;
  doc["command"] = command;
  write_text(dir / "config.json", doc.dump(2) + "\n");
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::logic_error&) {
      throw ValidationError(std::string("invalid ") + what + " entry '" + cell + "'");
    }
  }
  if (out.empty()) throw ValidationError(std::string("empty ") + what + " list");
  return out;
}

net::ModelConfig model_from(const json& cfg) {
  const json m = cfg.value("model", json::object());
  const std::string preset = m.value("preset", std::string("default"));
  const int seq_len = m.value("seq_len", preset == "toy" ? 27 : preset == "tiny" ? 9 : 243);
  net::ModelConfig base;
  if (preset == "default") {
    base = net::ModelConfig::defaults(seq_len);
  } else if (preset == "toy") {
    base = net::ModelConfig::toy(seq_len);
  } else if (preset == "tiny") {
    base = net::ModelConfig::tiny();
  } else {
    throw ValidationError("unknown model preset '" + preset + "'");
  }
  json merged = base;
  merged.erase("stride_schedule");
  for (auto it = m.begin(); it != m.end(); ++it) {
    if (it.key() != "preset") merged[it.key()] = it.value();
  }
  net::ModelConfig out;
  try {
    out = merged.get<net::ModelConfig>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  out.validate();
  return out;
}

json model_flags(const TrainFlags& f) {
  json m = json::object();
  if (!f.model.empty()) m["preset"] = f.model;
  if (f.seq_len) m["seq_len"] = *f.seq_len;
  return m.empty() ? json::object() : json{{"model", m}};
}

json train_flags(const TrainFlags& f) {
  json t = json::object();
  if (f.epochs) t["epochs"] = *f.epochs;
  if (f.batch_size) t["batch_size"] = *f.batch_size;
  if (f.steps_per_epoch) t["steps_per_epoch"] = *f.steps_per_epoch;
  if (f.data_fraction) t["data_fraction"] = *f.data_fraction;
  if (f.val_max_records) t["val_max_records"] = *f.val_max_records;
  if (!f.mix.empty()) t["mix_weights"] = parse_list(f.mix, "--mix");
  json mask = json::object();
  if (f.rs) mask["rs"] = *f.rs;
  if (f.rt) mask["rt"] = *f.rt;
  if (f.strategy) mask["strategy"] = *f.strategy;
  if (!mask.empty()) t["mask"] = mask;
  json out = model_flags(f);
  if (!t.empty()) out["train"] = t;
  if (!f.data.empty()) out["data"] = f.data;
  return out;
}

data::SubjectSplit split_from(const json& cfg) {
  data::SubjectSplit s;
  if (cfg.contains("split")) {
    try {
      s.train = cfg["split"].value("train", s.train);
      s.val = cfg["split"].value("val", s.val);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("split config: ") + e.what());
    }
  }
  data::require_disjoint(s);
  return s;
}

struct LoadedData {
  std::vector<std::vector<data::SequenceRecord>> train;
  std::vector<data::SequenceRecord> val;
};

LoadedData load_data(const json& cfg) {
  const auto dirs = cfg.value("data", std::vector<std::string>{});
  if (dirs.empty()) throw ValidationError("--data is required");
  const data::SubjectSplit split = split_from(cfg);
  LoadedData out;
  for (const auto& d : dirs) {
    auto parts = data::split_by_subject(data::read_dataset(d), split);
    out.train.push_back(std::move(parts.train));
    out.val.insert(out.val.end(), parts.val.begin(), parts.val.end());
  }
  return out;
}

train::TrainPlan plan_from(const json& cfg, train::Stage stage) {
  train::TrainPlan plan = stage == train::Stage::kPretrain ? train::TrainPlan::pretrain() : train::TrainPlan::finetune();
  if (cfg.contains("train")) train::update_from_json(cfg["train"], plan);
  plan.stage = stage;
  plan.seed = cfg.value("seed", std::uint64_t{0});
  plan.validate();
  return plan;
}

void print_epoch(const train::EpochLog& e) {
  std::ostringstream line;
  line << "epoch " << e.epoch << " loss " << num(e.loss);
  for (const auto& [task, loss] : e.tasks) line << ' ' << task << ' ' << num(loss);
  line << " lr " << num(e.lr);
  if (e.val_mpjpe_mm) line << " val_mpjpe_mm " << num(*e.val_mpjpe_mm);
  info(line.str());
}

void save_training(const fs::path& dir, const net::ModelState<float>& state, const train::TrainPlan& plan,
                   const train::TrainLog& log, const json& cfg, const std::string& command) {
  save_checkpoint(dir / "checkpoint.mpm", state, json{{"command", command}, {"plan", plan}});
  log.write_csv(dir / "train_log.csv");
  log.write_jsonl(dir / "train_log.jsonl");
  json resolved = cfg;
  resolved["model"] = state.config;
  resolved["train"] = plan;
  write_resolved(dir, command, resolved);
}

void check_stage_flag(const TrainFlags& f, int expected, const char* command) {
  if (f.stage && *f.stage != expected) {
    throw ValidationError(std::string(command) + " runs stage " + std::to_string(expected) + ", not " +
                          std::to_string(*f.stage));
  }
}

// ---------------------------------------------------------------------------

struct SynthFlags {
  std::optional<int> n;
  std::optional<int> length;
  std::optional<double> noise;
  std::optional<int> subjects;
  std::string families;
};

int cmd_synth(const Common& c, const SynthFlags& f) {
  json flags = json::object();
  json s = json::object();
  if (f.n) s["n_sequences"] = *f.n;
  if (f.length) s["length"] = *f.length;
  if (f.noise) s["noise_sigma_mm"] = *f.noise;
  if (f.subjects) s["n_subjects"] = *f.subjects;
  if (!f.families.empty()) {
    json fam = json::array();
    std::stringstream ss(f.families);
    std::string name;
    while (std::getline(ss, name, ',')) fam.push_back(name);
    s["families"] = fam;
  }
  if (!s.empty()) flags["synth"] = s;

  data::SynthSpec spec;
  json defaults{{"seed", 0},
                {"synth",
                 {{"n_sequences", spec.n_sequences},
                  {"length", spec.length},
                  {"fps", spec.fps},
                  {"noise_sigma_mm", spec.noise_sigma_mm},
                  {"n_subjects", spec.n_subjects},
                  {"families", {"walk", "reach", "squat", "idle_sway"}},
                  {"focal_px", spec.focal_px},
                  {"image_size_px", spec.image_size_px},
                  {"min_distance_mm", spec.min_distance_mm},
                  {"max_distance_mm", spec.max_distance_mm}}}};
  const json cfg = resolve(defaults, c, flags);
  try {
    const json& j = cfg.at("synth");
    spec.n_sequences = j.at("n_sequences").get<int>();
    spec.length = j.at("length").get<int>();
    spec.fps = j.at("fps").get<double>();
    spec.noise_sigma_mm = j.at("noise_sigma_mm").get<double>();
    spec.n_subjects = j.at("n_subjects").get<int>();
    spec.focal_px = j.at("focal_px").get<double>();
    spec.image_size_px = j.at("image_size_px").get<double>();
    spec.min_distance_mm = j.at("min_distance_mm").get<double>();
    spec.max_distance_mm = j.at("max_distance_mm").get<double>();
    spec.families.clear();
    for (const auto& name : j.at("families")) spec.families.push_back(data::parse_family(name.get<std::string>()));
    spec.seed = cfg.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synth config: ") + e.what());
  }
  const fs::path dir = out_dir(c);
  const auto records = data::synth_generate(spec);
  data::write_dataset(dir, records);
  write_resolved(dir, "synth", cfg);
  std::cout << "wrote " << records.size() << " records to " << dir.string() << '\n';
  return 0;
}

int cmd_pretrain(const Common& c, const TrainFlags& f) {
  check_stage_flag(f, 1, "pretrain");
  const json cfg = resolve(json{{"seed", 0}}, c, train_flags(f));
  const net::ModelConfig model = model_from(cfg);
  train::TrainPlan plan = plan_from(cfg, train::Stage::kPretrain);
  const LoadedData data = load_data(cfg);
  const fs::path dir = out_dir(c);

  auto state = net::ModelState<float>::initialize(model, plan.seed);
  train::Trainer trainer(state, plan);
  const train::TrainLog log = trainer.run(data.train, data.val, print_epoch);
  save_training(dir, state, plan, log, cfg, "pretrain");
  std::cout << "wrote " << (dir / "checkpoint.mpm").string() << '\n';
  return 0;
}

int cmd_finetune(const Common& c, const TrainFlags& f) {
  check_stage_flag(f, 2, "finetune");
  json flags = train_flags(f);
  if (!f.ckpt.empty()) flags["checkpoint"] = f.ckpt;
  if (f.scratch) flags["scratch"] = true;
  const json cfg = resolve(json{{"seed", 0}, {"scratch", false}}, c, flags);
  train::TrainPlan plan = plan_from(cfg, train::Stage::kFinetune);
  const LoadedData data = load_data(cfg);

  net::ModelState<float> state;
  if (cfg.value("scratch", false)) {
    state = net::ModelState<float>::initialize(model_from(cfg), plan.seed);
  } else {
    const std::string ckpt = cfg.value("checkpoint", std::string());
    if (ckpt.empty()) throw ValidationError("finetune needs --ckpt or --scratch");
    const net::ModelState<float> pre = net::load_checkpoint(ckpt);
    state = pre.stage == net::StateStage::kFinetuned ? pre : net::transplant_pretrained(pre, pre.config, plan.seed);
  }
  const fs::path dir = out_dir(c);
  train::Trainer trainer(state, plan);
  const train::TrainLog log = trainer.run(data.train, data.val, print_epoch);
  save_training(dir, state, plan, log, cfg, "finetune");
  std::cout << "wrote " << (dir / "checkpoint.mpm").string() << '\n';
  return 0;
}

struct EvalFlags {
  std::string ckpt;
  std::vector<std::string> data;
  std::optional<int> stage;
  std::string subset = "val";
};

std::vector<data::SequenceRecord> eval_records(const json& cfg, const std::string& subset) {
  const auto dirs = cfg.value("data", std::vector<std::string>{});
  if (dirs.empty()) throw ValidationError("--data is required");
  const data::SubjectSplit split = split_from(cfg);
  std::vector<data::SequenceRecord> out;
  for (const auto& d : dirs) {
    auto records = data::read_dataset(d);
    if (subset == "all") {
      out.insert(out.end(), records.begin(), records.end());
    } else {
      auto parts = data::split_by_subject(records, split);
      auto& pick = subset == "train" ? parts.train : parts.val;
      out.insert(out.end(), pick.begin(), pick.end());
    }
  }
  if (out.empty()) throw ValidationError("no records in the '" + subset + "' subset");
  return out;
}

int cmd_eval(const Common& c, const EvalFlags& f) {
  json flags{{"checkpoint", f.ckpt}, {"subset", f.subset}};
  if (!f.data.empty()) flags["data"] = f.data;
  if (f.stage) flags["stage"] = *f.stage;
  const json cfg = resolve(json{{"seed", 0}, {"stage", 2}}, c, flags);
  const int stage = cfg.value("stage", 2);
  if (stage != 1 && stage != 2) throw ValidationError("--stage must be 1 or 2");
  if (f.ckpt.empty()) throw ValidationError("--ckpt is required");
  net::ModelState<float> state = net::load_checkpoint(f.ckpt);
  if (stage == 2) infer::require_finetuned(state);
  const auto records = eval_records(cfg, cfg.value("subset", std::string("val")));
  const fs::path dir = out_dir(c);

  net::MpmNet<float> model(state);
  std::ostringstream rows;
  rows << "record,frames,mpjpe_mm,p_mpjpe_mm,pck,auc\n";
  std::vector<pose::PoseSequence> preds, gts;
  for (const auto& r : records) {
    if (!r.paired()) continue;
    pose::PoseSequence pred = stage == 2 ? infer::lift_sequence(state, *r.pose2d).pred3d
                                         : train::lift_2d(model, *r.pose2d, net::DecodeStage::kPretrain);
    const pose::MetricReport m = pose::evaluate(pred, *r.pose3d);
    rows << r.id << ',' << r.frames() << ',' << num(m.mpjpe_mm) << ',' << num(m.p_mpjpe_mm) << ',' << num(m.pck)
         << ',' << num(m.auc) << '\n';
    preds.push_back(std::move(pred));
    gts.push_back(*r.pose3d);
  }
  if (preds.empty()) throw ValidationError("no paired records to evaluate");
  const pose::MetricReport all = pose::evaluate(infer::concat_frames(preds), infer::concat_frames(gts));
  rows << "all," << infer::concat_frames(gts).frames() << ',' << num(all.mpjpe_mm) << ',' << num(all.p_mpjpe_mm)
       << ',' << num(all.pck) << ',' << num(all.auc) << '\n';
  write_text(dir / "metrics.csv", rows.str());
  json report{{"mpjpe_mm", all.mpjpe_mm},
              {"p_mpjpe_mm", all.p_mpjpe_mm},
              {"pck", all.pck},
              {"auc", all.auc},
              {"per_joint_mpjpe", all.per_joint_mpjpe},
              {"degenerate_frames", all.degenerate_frames},
              {"records", preds.size()}};
  write_text(dir / "metrics.json", report.dump(2) + "\n");
  write_resolved(dir, "eval", cfg);
  std::cout << "mpjpe_mm " << num(all.mpjpe_mm) << "\np_mpjpe_mm " << num(all.p_mpjpe_mm) << "\npck "
            << num(all.pck) << "\nauc " << num(all.auc) << "\nrecords " << preds.size() << '\n';
  return 0;
}

struct CompleteFlags {
  std::string ckpt;
  std::vector<std::string> data;
  std::string input = "3d";
  std::string part;
  std::string joints;
  std::optional<int> frame_begin;
  std::optional<int> frame_end;
  bool repredict = false;
  std::string subset = "val";
};

int cmd_complete(const Common& c, const CompleteFlags& f) {
  json occ = json::object();
  if (!f.part.empty()) occ["part"] = f.part;
  if (!f.joints.empty()) {
    json js = json::array();
    for (double v : parse_list(f.joints, "--joints")) js.push_back(static_cast<int>(v));
    occ["joints"] = js;
  }
  if (f.frame_begin) occ["frame_begin"] = *f.frame_begin;
  if (f.frame_end) occ["frame_end"] = *f.frame_end;
  json flags{{"checkpoint", f.ckpt}, {"input", f.input}, {"subset", f.subset}};
  if (!occ.empty()) flags["occlusion"] = occ;
  if (f.repredict) flags["pass_through"] = false;
  if (!f.data.empty()) flags["data"] = f.data;
  const json cfg = resolve(json{{"seed", 0}, {"pass_through", true}, {"occlusion", json::object()}}, c, flags);

  const json& o = cfg["occlusion"];
  infer::Occlusion occlusion;
  if (o.contains("part") && o.contains("joints")) throw ValidationError("give either --part or --joints, not both");
  const int begin = o.value("frame_begin", 0);
  const int end = o.value("frame_end", -1);
  if (o.contains("part")) {
    occlusion = infer::Occlusion::of_body_part(o["part"].get<std::string>(), begin, end);
  } else {
    occlusion = infer::Occlusion::of_joints(o.value("joints", std::vector<int>{}), begin, end);
  }
  if (f.ckpt.empty()) throw ValidationError("--ckpt is required");
  const std::string input = cfg.value("input", std::string("3d"));
  if (input != "2d" && input != "3d") throw ValidationError("--input must be 2d or 3d");
  const bool pass_through = cfg.value("pass_through", true);
  net::ModelState<float> state = net::load_checkpoint(f.ckpt);
  const auto records = eval_records(cfg, cfg.value("subset", std::string("val")));
  const fs::path dir = out_dir(c);

  std::ostringstream rows;
  rows << "record,frames,occluded_points,mpjpe_mm,occluded_mpjpe_mm,baseline_occluded_mpjpe_mm\n";
  std::vector<data::SequenceRecord> outputs;
  for (const auto& r : records) {
    if (input == "2d" ? !r.paired() : !r.has_3d()) continue;
    // End past the clip is clamped so one span fits clips of any length.
    infer::Occlusion occ = occlusion;
    if (occ.frame_end > r.frames()) occ.frame_end = r.frames();
    if (occ.frame_begin > r.frames()) occ.frame_begin = r.frames();
    infer::CompletionResult res = input == "2d" ? infer::complete_from_partial_2d(state, *r.pose2d, occ, &*r.pose3d)
                                                : infer::complete_from_partial_3d(state, *r.pose3d, occ, pass_through);
    const double baseline = infer::masked_mpjpe(infer::copy_last_visible(*r.pose3d, res.mask), *r.pose3d, res.mask);
    rows << r.id << ',' << r.frames() << ',' << res.mask.count() << ',' << num(res.mpjpe_mm.value_or(0.0)) << ','
         << num(res.occluded_mpjpe_mm.value_or(0.0)) << ',' << num(baseline) << '\n';
    data::SequenceRecord out = r;
    out.pose3d = res.pred3d;
    outputs.push_back(std::move(out));
  }
  if (outputs.empty()) throw ValidationError("no records carry the requested input modality");
  write_text(dir / "completion.csv", rows.str());
  data::write_dataset(dir / "predictions", outputs);
  write_resolved(dir, "complete", cfg);
  std::cout << "completed " << outputs.size() << " records into " << (dir / "predictions").string() << '\n';
  return 0;
}

struct GridFlags {
  TrainFlags train;
  std::string rs_list;
  std::string rt_list;
  std::optional<int> finetune_epochs;
};

int cmd_grid(const Common& c, const GridFlags& f) {
  json flags = train_flags(f.train);
  json grid = json::object();
  if (!f.rs_list.empty()) {
    json a = json::array();
    for (double v : parse_list(f.rs_list, "--rs-list")) a.push_back(static_cast<int>(v));
    grid["rs"] = a;
  } else if (f.train.rs) {
    grid["rs"] = {*f.train.rs};
  }
  if (!f.rt_list.empty()) {
    grid["rt"] = parse_list(f.rt_list, "--rt-list");
  } else if (f.train.rt) {
    grid["rt"] = {*f.train.rt};
  }
  if (f.finetune_epochs) grid["finetune_epochs"] = *f.finetune_epochs;
  if (!grid.empty()) flags["grid"] = grid;
  const json cfg =
      resolve(json{{"seed", 0}, {"grid", {{"rs", {5}}, {"rt", {0.6}}, {"finetune_epochs", 0}}}}, c, flags);

  infer::GridSpec spec;
  spec.config = model_from(cfg);
  spec.pretrain = plan_from(cfg, train::Stage::kPretrain);
  spec.finetune = plan_from(cfg, train::Stage::kFinetune);
  spec.seed = spec.pretrain.seed;
  try {
    spec.rs = cfg["grid"].at("rs").get<std::vector<int>>();
    spec.rt = cfg["grid"].at("rt").get<std::vector<double>>();
    spec.finetune.epochs = cfg["grid"].value("finetune_epochs", 0);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("grid config: ") + e.what());
  }
  const LoadedData data = load_data(cfg);
  std::vector<data::SequenceRecord> train;
  for (const auto& d : data.train) train.insert(train.end(), d.begin(), d.end());
  const fs::path dir = out_dir(c);
  const auto cells = infer::ratio_grid(spec, train, data.val);
  const std::string table = infer::grid_csv(cells, spec.rs, spec.rt);
  write_text(dir / "grid.csv", table);
  write_resolved(dir, "grid", cfg);
  std::cout << table;
  return 0;
}

int cmd_census(const Common& c, const TrainFlags& f) {
  const json cfg = resolve(json{{"seed", 0}}, c, model_flags(f));
  const net::ModelConfig model = model_from(cfg);
  const auto state = net::ModelState<float>::initialize(model, cfg.value("seed", std::uint64_t{0}));
  const net::ParamCensus census = net::param_census(state);
  json doc{{"encoders", census.encoders},
           {"shared", census.shared},
           {"decoders", census.decoders},
           {"total", census.total},
           {"shared_fraction", census.shared_fraction()},
           {"model", model}};
  std::cout << "encoders " << census.encoders << "\nshared " << census.shared << "\ndecoders " << census.decoders
            << "\ntotal " << census.total << "\nshared_fraction " << num(census.shared_fraction()) << '\n';
  if (!c.out.empty()) {
    const fs::path dir = out_dir(c);
    write_text(dir / "census.json", doc.dump(2) + "\n");
    write_resolved(dir, "census", cfg);
  }
  return 0;
}

int cmd_plot_data(const Common& c, const std::vector<std::string>& logs) {
  if (logs.empty()) throw ValidationError("--log is required");
  const json cfg = resolve(json{{"seed", 0}}, c, json{{"logs", logs}});
  const fs::path dir = out_dir(c);
  std::ostringstream csv;
  std::ostringstream lines;
  csv << "source,epoch,series,value\n";
  for (const auto& path : logs) {
    const train::TrainLog log = train::TrainLog::read_csv(path);
    const std::string source = fs::path(path).parent_path().filename().string().empty()
                                   ? fs::path(path).stem().string()
                                   : fs::path(path).parent_path().filename().string();
    auto emit = [&](int epoch, const std::string& series, double value) {
      csv << source << ',' << epoch << ',' << series << ',' << num(value) << '\n';
      lines << json{{"source", source}, {"epoch", epoch}, {"series", series}, {"value", value}}.dump() << '\n';
    };
    for (const auto& e : log.epochs()) {
      emit(e.epoch, "loss", e.loss);
      emit(e.epoch, "lr", e.lr);
      for (const auto& [task, loss] : e.tasks) emit(e.epoch, "loss_" + task, loss);
      if (e.val_mpjpe_mm) emit(e.epoch, "val_mpjpe_mm", *e.val_mpjpe_mm);
    }
  }
  write_text(dir / "series.csv", csv.str());
  write_text(dir / "series.jsonl", lines.str());
  write_resolved(dir, "plot-data", cfg);
  std::cout << "wrote " << (dir / "series.csv").string() << '\n';
  return 0;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file (flags override it)");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output directory");
}

void add_model(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--model", f.model, "Model preset")->check(CLI::IsMember({"default", "toy", "tiny"}));
  cmd->add_option("--seq-len", f.seq_len, "Sequence length (power of 3, e.g. 81 or 243)");
}

void add_training(CLI::App* cmd, TrainFlags& f) {
  add_model(cmd, f);
  cmd->add_option("--data", f.data, "mpm-data/1 directory; repeat to mix datasets");
  cmd->add_option("--mix", f.mix, "Comma-separated dataset weights W1,W2,...");
  cmd->add_option("--stage", f.stage, "Training stage (1 pretrain, 2 finetune)");
  cmd->add_option("--epochs", f.epochs, "Number of epochs");
  cmd->add_option("--batch-size", f.batch_size, "Windows per batch");
  cmd->add_option("--steps-per-epoch", f.steps_per_epoch, "Steps per epoch (0 derives it from the data)");
  cmd->add_option("--rs", f.rs, "Joints masked per retained frame");
  cmd->add_option("--rt", f.rt, "Fraction of fully masked frames");
  cmd->add_option("--strategy", f.strategy, "Mask strategy")
      ->check(CLI::IsMember({"spatial", "temporal", "spatiotemporal"}));
  cmd->add_option("--data-fraction", f.data_fraction, "Few-shot fraction of the training records");
  cmd->add_option("--val-max-records", f.val_max_records, "Records scored per validation pass (0 = all)");
}

int report(const char* kind, const std::string& what, int code) {
  std::string msg = what;
  for (char& ch : msg) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error: " << kind << ": " << msg << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked pose modeling: synthetic data, training, evaluation and completion"};
  app.require_subcommand(1);

  Common common;
  TrainFlags tf;
  SynthFlags sf;
  EvalFlags ef;
  CompleteFlags cf;
  GridFlags gf;
  std::vector<std::string> logs;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic mpm-data/1 dataset");
  add_common(synth, common);
  synth->add_option("--n", sf.n, "Number of sequences");
  synth->add_option("--length", sf.length, "Frames per sequence");
  synth->add_option("--noise", sf.noise, "3D jitter sigma (mm) before projection");
  synth->add_option("--subjects", sf.subjects, "Number of subjects");
  synth->add_option("--families", sf.families, "Comma-separated motion families");

  auto* pretrain = app.add_subcommand("pretrain", "Stage I: masked pose modeling");
  add_common(pretrain, common);
  add_training(pretrain, tf);

  auto* finetune = app.add_subcommand("finetune", "Stage II: 3D lifting");
  add_common(finetune, common);
  add_training(finetune, tf);
  finetune->add_option("--ckpt", tf.ckpt, "Stage-I checkpoint to start from");
  finetune->add_flag("--scratch", tf.scratch, "Start from fresh parameters");

  auto* eval = app.add_subcommand("eval", "Lift 2D and report MPJPE, P-MPJPE, PCK, AUC");
  add_common(eval, common);
  eval->add_option("--ckpt", ef.ckpt, "Checkpoint")->required();
  eval->add_option("--data", ef.data, "mpm-data/1 directory (repeatable)");
  eval->add_option("--stage", ef.stage, "Decoder: 2 fine-tuned (default) or 1 pretraining");
  eval->add_option("--subset", ef.subset, "Records to score")->check(CLI::IsMember({"train", "val", "all"}));

  auto* complete = app.add_subcommand("complete", "Complete occluded poses");
  add_common(complete, common);
  complete->add_option("--ckpt", cf.ckpt, "Checkpoint")->required();
  complete->add_option("--data", cf.data, "mpm-data/1 directory (repeatable)");
  complete->add_option("--input", cf.input, "Observed modality")->check(CLI::IsMember({"2d", "3d"}));
  complete->add_option("--part", cf.part, "Occluded body part");
  complete->add_option("--joints", cf.joints, "Comma-separated occluded joint indices");
  complete->add_option("--frame-begin", cf.frame_begin, "First occluded frame");
  complete->add_option("--frame-end", cf.frame_end, "One past the last occluded frame");
  complete->add_flag("--repredict", cf.repredict, "Re-predict observed 3D joints instead of passing them through");
  complete->add_option("--subset", cf.subset, "Records to complete")->check(CLI::IsMember({"train", "val", "all"}));

  auto* grid = app.add_subcommand("grid", "Mask-ratio grid search table");
  add_common(grid, common);
  add_training(grid, gf.train);
  grid->add_option("--rs-list", gf.rs_list, "Comma-separated r_s values");
  grid->add_option("--rt-list", gf.rt_list, "Comma-separated r_t values");
  grid->add_option("--finetune-epochs", gf.finetune_epochs, "Stage-II epochs per cell (0 scores Stage I)");

  auto* census = app.add_subcommand("census", "Parameter counts per component");
  add_common(census, common);
  add_model(census, tf);

  auto* plot = app.add_subcommand("plot-data", "Convert training logs to plot-ready series");
  add_common(plot, common);
  plot->add_option("--log", logs, "train_log.csv (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("validation", e.what(), 2);
  }

  try {
    if (*synth) return cmd_synth(common, sf);
    if (*pretrain) return cmd_pretrain(common, tf);
    if (*finetune) return cmd_finetune(common, tf);
    if (*eval) return cmd_eval(common, ef);
    if (*complete) return cmd_complete(common, cf);
    if (*grid) return cmd_grid(common, gf);
    if (*census) return cmd_census(common, tf);
    if (*plot) return cmd_plot_data(common, logs);
  } catch (const ValidationError& e) {
    return report("validation", e.what(), 2);
  } catch (const DataFormatError& e) {
    return report("data-format", e.what(), 3);
  } catch (const NumericError& e) {
    return report("numeric", e.what(), 4);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), 4);
  }
  return 0;
}
