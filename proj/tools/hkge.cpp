// hkge: train, evaluate, ablate and analyze hyperbolic hierarchical KG embeddings.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hkge/hkge.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunConfig {
  hkge::ModelConfig model;
  hkge::TrainConfig train;
  std::string dataset_dir;
  std::string out_dir = "runs/hkge";
  std::string split = "valid";
  bool per_relation = false;
  hkge::TieBreak tie_break = hkge::TieBreak::random;
  std::string checkpoint;
  std::vector<std::string> relations;
  std::size_t samples = 10000;
  bool grid = false;
  bool curvature_sweep = false;
};

json to_json(const RunConfig& c) {
  json j;
  j["dim"] = c.model.dim;
  j["curvature_mode"] = hkge::to_string(c.model.curvature_mode);
  j["geometry"] = hkge::to_string(c.model.geometry);
  j["inter_level"] = c.model.use_inter_level;
  j["intra_level"] = c.model.use_intra_level;
  j["init_scale"] = c.model.init_scale;
  j["epochs"] = c.train.epochs;
  j["batch_size"] = c.train.batch_size;
  j["neg_samples"] = c.train.neg_samples;
  j["lr"] = c.train.lr;
  j["optimizer"] = hkge::to_string(c.train.optimizer);
  j["seed"] = c.train.seed;
  j["grad_clip"] = c.train.grad_clip ? json(*c.train.grad_clip) : json(nullptr);
  j["eval_every"] = c.train.eval_every;
  j["patience"] = c.train.patience;
  j["threads"] = c.train.threads;
  j["dataset_dir"] = c.dataset_dir;
  j["out_dir"] = c.out_dir;
  j["split"] = c.split;
  j["per_relation"] = c.per_relation;
  j["tie_break"] = hkge::to_string(c.tie_break);
  j["checkpoint"] = c.checkpoint;
  j["relations"] = c.relations;
  j["samples"] = c.samples;
  j["grid"] = c.grid;
  j["curvature_sweep"] = c.curvature_sweep;
  return j;
}

void merge_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw hkge::FormatError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "dim") c.model.dim = v.get<int>();
    else if (key == "curvature_mode") c.model.curvature_mode = hkge::parse_curvature_mode(v.get<std::string>());
    else if (key == "geometry") c.model.geometry = hkge::parse_geometry(v.get<std::string>());
    else if (key == "inter_level") c.model.use_inter_level = v.get<bool>();
    else if (key == "intra_level") c.model.use_intra_level = v.get<bool>();
    else if (key == "init_scale") c.model.init_scale = v.get<double>();
    else if (key == "epochs") c.train.epochs = v.get<int>();
    else if (key == "batch_size") c.train.batch_size = v.get<int>();
    else if (key == "neg_samples") c.train.neg_samples = v.get<int>();
    else if (key == "lr") c.train.lr = v.get<double>();
    else if (key == "optimizer") c.train.optimizer = hkge::parse_optimizer(v.get<std::string>());
    else if (key == "seed") c.train.seed = v.get<std::uint64_t>();
    else if (key == "grad_clip") c.train.grad_clip = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    else if (key == "eval_every") c.train.eval_every = v.get<int>();
    else if (key == "patience") c.train.patience = v.get<int>();
    else if (key == "threads") c.train.threads = v.get<int>();
    else if (key == "dataset_dir") c.dataset_dir = v.get<std::string>();
    else if (key == "out_dir") c.out_dir = v.get<std::string>();
    else if (key == "split") c.split = v.get<std::string>();
    else if (key == "per_relation") c.per_relation = v.get<bool>();
    else if (key == "tie_break") c.tie_break = hkge::parse_tie_break(v.get<std::string>());
    else if (key == "checkpoint") c.checkpoint = v.get<std::string>();
    else if (key == "relations") c.relations = v.get<std::vector<std::string>>();
    else if (key == "samples") c.samples = v.get<std::size_t>();
    else if (key == "grid") c.grid = v.get<bool>();
    else if (key == "curvature_sweep") c.curvature_sweep = v.get<bool>();
    else throw hkge::FormatError("unknown config key '" + key + "'");
  }
}

// Values given on the command line; unset ones leave the config file / defaults alone.
struct Flags {
  std::string config_file;
  std::optional<std::string> dataset_dir, out_dir, geometry, curvature_mode, optimizer, split, tie_break, checkpoint;
  std::optional<int> dim, epochs, batch_size, neg_samples, eval_every, patience, threads;
  std::optional<double> lr, init_scale, grad_clip;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::vector<std::string> relations;
  bool no_inter = false, no_intra = false, per_relation = false, grid = false, sweep = false;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file; flags override its values");
  cmd->add_option("--dataset-dir", f.dataset_dir, "directory with train.txt, valid.txt, test.txt");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--threads", f.threads, "worker threads");
}

void add_model_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--dim", f.dim, "embedding dimension (even)");
  cmd->add_option("--geometry", f.geometry, "hyperbolic | euclidean");
  cmd->add_option("--curvature-mode", f.curvature_mode, "fixed | global | relation | attention");
  cmd->add_flag("--no-inter-level", f.no_inter, "disable the per-relation scaling");
  cmd->add_flag("--no-intra-level", f.no_intra, "disable the per-relation rotation");
  cmd->add_option("--init-scale", f.init_scale, "std of the initial tangent embeddings");
}

void add_train_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--batch-size", f.batch_size, "positives per mini-batch");
  cmd->add_option("--neg-samples", f.neg_samples, "negatives per positive");
  cmd->add_option("--optimizer", f.optimizer, "adagrad | adam");
  cmd->add_option("--eval-every", f.eval_every, "validate every N epochs");
  cmd->add_option("--patience", f.patience, "validation rounds without improvement before stopping (0: never)");
  cmd->add_option("--grad-clip", f.grad_clip, "clip the global gradient norm");
}

void add_eval_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--split", f.split, "valid | test | train");
  cmd->add_option("--tie-break", f.tie_break, "random | pessimistic | optimistic");
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw hkge::FormatError("cannot open config file " + f.config_file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw hkge::FormatError(f.config_file + ": " + e.what());
    }
    merge_json(c, j);
  }
  if (f.dataset_dir) c.dataset_dir = *f.dataset_dir;
  if (f.out_dir) c.out_dir = *f.out_dir;
  if (f.seed) c.train.seed = *f.seed;
  if (f.threads) c.train.threads = *f.threads;
  if (f.dim) c.model.dim = *f.dim;
  if (f.geometry) c.model.geometry = hkge::parse_geometry(*f.geometry);
  if (f.curvature_mode) c.model.curvature_mode = hkge::parse_curvature_mode(*f.curvature_mode);
  if (f.no_inter) c.model.use_inter_level = false;
  if (f.no_intra) c.model.use_intra_level = false;
  if (f.init_scale) c.model.init_scale = *f.init_scale;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.lr) c.train.lr = *f.lr;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.neg_samples) c.train.neg_samples = *f.neg_samples;
  if (f.optimizer) c.train.optimizer = hkge::parse_optimizer(*f.optimizer);
  if (f.eval_every) c.train.eval_every = *f.eval_every;
  if (f.patience) c.train.patience = *f.patience;
  if (f.grad_clip) c.train.grad_clip = *f.grad_clip;
  if (f.split) c.split = *f.split;
  if (f.tie_break) c.tie_break = hkge::parse_tie_break(*f.tie_break);
  if (f.checkpoint) c.checkpoint = *f.checkpoint;
  if (!f.relations.empty()) c.relations = f.relations;
  if (f.samples) c.samples = *f.samples;
  if (f.per_relation) c.per_relation = true;
  if (f.grid) c.grid = true;
  if (f.sweep) c.curvature_sweep = true;

  c.model.validate();
  c.train.validate();
  if (c.split != "valid" && c.split != "test" && c.split != "train") {
    throw hkge::DomainError("--split must be valid, test or train");
  }
  if (c.samples == 0) throw hkge::DomainError("--samples must be > 0");
  if (c.dataset_dir.empty()) throw hkge::DomainError("--dataset-dir is required");
  return c;
}

// eval usually points at a training directory, so it keeps its own config file.
void start_run(const RunConfig& c, const std::string& file = "config.json") {
  fs::create_directories(c.out_dir);
  std::ofstream out(fs::path(c.out_dir) / file);
  if (!out) throw hkge::FormatError("cannot write " + (fs::path(c.out_dir) / file).string());
  out << to_json(c).dump(2) << '\n';
}

void report_dataset_checks(const RunConfig& c, const hkge::TripleStore& base) {
  const auto name = fs::path(c.dataset_dir).lexically_normal().filename().string();
  const auto* ref = hkge::find_reference(name.empty() ? fs::path(c.dataset_dir).parent_path().filename().string() : name);
  if (!ref) return;
  const auto check = hkge::check_reference(hkge::dataset_stats(base), *ref);
  for (const auto& d : check.deviations) std::cerr << "note: " << d << '\n';
  for (const auto& m : check.mismatches) std::cerr << "warning: " << m << '\n';
}

struct Prepared {
  hkge::TripleStore store;  // reciprocal-augmented
  hkge::FilterIndex index;
};

Prepared prepare(const RunConfig& c, const hkge::Vocabulary* entities = nullptr,
                 const hkge::Vocabulary* relations = nullptr) {
  const auto raw = hkge::load_dataset(c.dataset_dir);
  auto base = entities ? hkge::encode_with_vocab(raw, *entities, *relations) : hkge::build_vocab(raw);
  report_dataset_checks(c, base);
  Prepared p{hkge::augment_reciprocal(base), {}};
  p.index = hkge::build_filter_index(p.store);
  return p;
}

hkge::EvalOptions eval_options(const RunConfig& c) {
  hkge::EvalOptions o;
  o.tie_break = c.tie_break;
  o.seed = c.train.seed;
  o.threads = c.train.threads;
  return o;
}

const std::vector<hkge::Triple>& pick_split(const hkge::TripleStore& s, const std::string& name) {
  if (name == "test") return s.test;
  if (name == "train") return s.train;
  return s.valid;
}

json metrics_json(const hkge::MetricReport& r) {
  return {{"n", r.n_queries}, {"mrr", r.mrr}, {"h1", r.hits[0]}, {"h3", r.hits[1]}, {"h10", r.hits[2]}};
}

std::string format_report(const hkge::MetricReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "n=%zu MRR=%.4f H@1=%.4f H@3=%.4f H@10=%.4f", r.n_queries, r.mrr, r.hits[0],
                r.hits[1], r.hits[2]);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  start_run(c);
  const auto data = prepare(c);
  const fs::path out(c.out_dir);
  hkge::write_vocab(out / "entities.tsv", data.store.entities);
  hkge::write_vocab(out / "relations.tsv", data.store.relations);

  std::ofstream metrics(out / "metrics.csv", std::ios::binary);
  if (!metrics) throw hkge::FormatError("cannot write " + (out / "metrics.csv").string());
  metrics.precision(10);
  metrics << "epoch,split,loss,mrr,h1,h3,h10,clamp_events\n";

  hkge::TrainHooks<float> hooks;
  hooks.on_epoch = [&](const hkge::EpochRecord& e) {
    metrics << e.epoch << ',' << (e.validated ? "valid" : "train") << ',' << e.loss << ',';
    if (e.validated) {
      metrics << e.valid.mrr << ',' << e.valid.hits[0] << ',' << e.valid.hits[1] << ',' << e.valid.hits[2];
    } else {
      metrics << ",,";
    }
    metrics << ',' << e.clamp_events << '\n' << std::flush;
    if (e.validated) std::cerr << "epoch " << e.epoch << " loss " << e.loss << " valid " << format_report(e.valid) << '\n';
  };
  hooks.on_best = [&](const hkge::Model<float>& m, int, const hkge::MetricReport&) {
    hkge::save_checkpoint(out / "model.ckpt", m);
  };

  auto model = hkge::init_parameters<float>(c.model, data.store.num_entities(), data.store.num_relations(), c.train.seed);
  const auto result = hkge::train(std::move(model), data.store, data.index, c.train, eval_options(c), hooks);
  hkge::save_checkpoint(out / "model.ckpt", result.best);

  json summary;
  summary["epochs_run"] = result.epochs_run;
  summary["best_epoch"] = result.best_epoch;
  summary["best_valid"] = result.best_valid ? metrics_json(*result.best_valid) : json(nullptr);
  summary["aborted"] = result.aborted;
  summary["abort_reason"] = result.abort_reason;
  summary["entities"] = data.store.num_entities();
  summary["relations"] = data.store.num_base_relations();
  summary["seconds"] = seconds_since(t0);
  std::ofstream(out / "train_summary.json") << summary.dump(2) << '\n';

  if (result.best_valid) std::cout << "best epoch " << result.best_epoch << ": " << format_report(*result.best_valid) << '\n';
  if (result.aborted) {
    std::cerr << "error: training aborted: " << result.abort_reason << '\n';
    return 2;
  }
  return 0;
}

int cmd_eval(const RunConfig& c) {
  const fs::path ckpt = c.checkpoint.empty() ? fs::path(c.out_dir) / "model.ckpt" : fs::path(c.checkpoint);
  const auto bytes = hkge::read_file_bytes(ckpt);
  const auto header = hkge::parse_checkpoint_header(bytes);
  start_run(c, "eval_config.json");

  // Reuse the training vocabulary when it sits next to the checkpoint.
  const auto dir = ckpt.parent_path().empty() ? fs::path(".") : ckpt.parent_path();
  std::optional<hkge::Vocabulary> ents, rels;
  if (fs::exists(dir / "entities.tsv") && fs::exists(dir / "relations.tsv")) {
    ents = hkge::read_vocab(dir / "entities.tsv");
    rels = hkge::read_vocab(dir / "relations.tsv");
  }
  const auto data = ents ? prepare(c, &*ents, &*rels) : prepare(c);
  if (header.n_entities != data.store.num_entities() || header.n_relations != data.store.num_relations()) {
    throw hkge::FormatError("checkpoint " + ckpt.string() + " holds " + std::to_string(header.n_entities) +
                            " entities / " + std::to_string(header.n_relations) + " relations but the dataset has " +
                            std::to_string(data.store.num_entities()) + " / " +
                            std::to_string(data.store.num_relations()));
  }
  const auto model = hkge::deserialize_checkpoint<float>(bytes);
  const auto& queries = pick_split(data.store, c.split);
  const auto opts = eval_options(c);
  const auto ranks = hkge::rank_queries(model, std::span<const hkge::Triple>(queries), data.index, opts);
  if (ranks.empty()) throw hkge::DomainError("split '" + c.split + "' is empty");
  const auto report = hkge::report_from_ranks(ranks);
  const fs::path out(c.out_dir);
  hkge::write_metrics_csv(out / "eval_metrics.csv", c.split, report);
  std::cout << c.split << ": " << format_report(report) << '\n';
  if (c.per_relation) {
    const auto per = hkge::per_relation_report(data.store, queries, ranks);
    hkge::write_per_relation_csv(out / "per_relation.csv", per);
    for (const auto& [name, r] : per) std::cout << "  " << name << ": " << format_report(r) << '\n';
  }
  return 0;
}

struct AblationRow {
  std::string label;
  hkge::ModelConfig model;
};

std::vector<AblationRow> ablation_rows(const RunConfig& c) {
  using hkge::CurvatureMode;
  std::vector<AblationRow> rows;
  auto row = [&](std::string label, bool inter, bool intra, CurvatureMode mode) {
    auto m = c.model;
    m.use_inter_level = inter;
    m.use_intra_level = intra;
    m.curvature_mode = mode;
    rows.push_back({std::move(label), m});
  };
  const bool grid = c.grid || !c.curvature_sweep;
  if (grid) {
    row("inter", true, false, CurvatureMode::per_relation);
    row("intra", false, true, CurvatureMode::per_relation);
    row("inter+intra", true, true, CurvatureMode::per_relation);
    row("inter+curv", true, false, CurvatureMode::attention);
    row("intra+curv", false, true, CurvatureMode::attention);
    row("inter+intra+curv", true, true, CurvatureMode::attention);
  }
  if (c.curvature_sweep) {
    row("curv=1", true, true, CurvatureMode::fixed_one);
    row("curv=c", true, true, CurvatureMode::global);
    row("curv=c_r", true, true, CurvatureMode::per_relation);
    row("curv=c_hr", true, true, CurvatureMode::attention);
  }
  return rows;
}

int cmd_ablate(const RunConfig& c) {
  start_run(c);
  const auto data = prepare(c);
  const fs::path out(c.out_dir);
  std::ofstream csv(out / "ablation.csv", std::ios::binary);
  if (!csv) throw hkge::FormatError("cannot write " + (out / "ablation.csv").string());
  csv.precision(10);
  csv << "label,dim,geometry,curvature_mode,inter_level,intra_level,init_scale,epochs,batch_size,neg_samples,lr,"
         "optimizer,seed,best_epoch,valid_mrr,valid_h1,valid_h3,valid_h10,test_mrr,test_h1,test_h3,test_h10,aborted\n";
  int status = 0;
  for (const auto& row : ablation_rows(c)) {
    const auto t0 = std::chrono::steady_clock::now();
    auto model =
        hkge::init_parameters<float>(row.model, data.store.num_entities(), data.store.num_relations(), c.train.seed);
    const auto result = hkge::train(std::move(model), data.store, data.index, c.train, eval_options(c));
    const auto v = result.best_valid.value_or(hkge::MetricReport{});
    const auto t = data.store.test.empty()
                       ? hkge::MetricReport{}
                       : hkge::evaluate_split(result.best, std::span<const hkge::Triple>(data.store.test), data.index,
                                              eval_options(c));
    const auto& m = row.model;
    csv << row.label << ',' << m.dim << ',' << hkge::to_string(m.geometry) << ',' << hkge::to_string(m.curvature_mode)
        << ',' << m.use_inter_level << ',' << m.use_intra_level << ',' << m.init_scale << ',' << c.train.epochs << ','
        << c.train.batch_size << ',' << c.train.neg_samples << ',' << c.train.lr << ','
        << hkge::to_string(c.train.optimizer) << ',' << c.train.seed << ',' << result.best_epoch << ',' << v.mrr << ','
        << v.hits[0] << ',' << v.hits[1] << ',' << v.hits[2] << ',' << t.mrr << ',' << t.hits[0] << ',' << t.hits[1]
        << ',' << t.hits[2] << ',' << result.aborted << '\n'
        << std::flush;
    std::cout << row.label << ": valid " << format_report(v) << " (" << seconds_since(t0) << " s)\n";
    if (result.aborted) {
      std::cerr << "error: row " << row.label << " aborted: " << result.abort_reason << '\n';
      status = 2;
    }
  }
  return status;
}

int cmd_analyze(const RunConfig& c) {
  start_run(c);
  const auto raw = hkge::load_dataset(c.dataset_dir);
  const auto store = hkge::build_vocab(raw);
  auto names = c.relations;
  if (names.empty()) names = store.relations.names();

  std::vector<hkge::HierarchyRow> rows(names.size());
  auto work = [&](std::size_t i) { rows[i] = hkge::analyze_relation(store, names[i], c.samples, c.train.seed + i); };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(c.train.threads), names.size());
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < names.size(); ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < names.size(); i += n_threads) work(i);
      });
    }
  }

  hkge::write_hierarchy_csv(fs::path(c.out_dir) / "hierarchy.csv", rows);
  int status = 0;
  for (const auto& r : rows) {
    std::cout << r.relation << ": ";
    if (!r.error.empty()) {
      std::cout << "ERROR " << r.error << '\n';
      if (r.error == "unknown relation") status = 1;
      continue;
    }
    std::cout << "nodes " << r.nodes << " edges " << r.edges << " khs " << *r.khs;
    if (r.xi) std::cout << " xi " << r.xi->mean << " +- " << r.xi->std_error << " (" << r.xi->accepted << " accepted, "
                        << r.xi->rejected() << " rejected)";
    else std::cout << " xi n/a";
    std::cout << '\n';
  }
  return status;
}

int cmd_make_tree(const std::string& out_dir, int depth, std::uint64_t seed) {
  hkge::TreeKgOptions opts;
  opts.depth = depth;
  opts.seed = seed;
  const auto raw = hkge::make_binary_tree_kg(opts);
  hkge::write_dataset(out_dir, raw);
  std::cout << "wrote " << raw.train.size() << '/' << raw.valid.size() << '/' << raw.test.size()
            << " triples to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic hierarchical knowledge graph embeddings"};
  app.require_subcommand(1);
  Flags f;

  auto* train = app.add_subcommand("train", "train a model and keep the best validation checkpoint");
  add_common_flags(train, f);
  add_model_flags(train, f);
  add_train_flags(train, f);
  add_eval_flags(train, f);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_common_flags(eval, f);
  add_eval_flags(eval, f);
  eval->add_option("--checkpoint", f.checkpoint, "checkpoint file (default: <out-dir>/model.ckpt)");
  eval->add_flag("--per-relation", f.per_relation, "also write per_relation.csv");

  auto* ablate = app.add_subcommand("ablate", "train the ablation grid and/or the curvature sweep");
  add_common_flags(ablate, f);
  add_model_flags(ablate, f);
  add_train_flags(ablate, f);
  add_eval_flags(ablate, f);
  ablate->add_flag("--grid", f.grid, "six rows over scaling / rotation / attention curvature");
  ablate->add_flag("--curvature-sweep", f.sweep, "four rows over the curvature modes");

  auto* analyze = app.add_subcommand("analyze", "hierarchy statistics per relation");
  add_common_flags(analyze, f);
  analyze->add_option("--relations", f.relations, "relation names (default: all)")->delimiter(',');
  analyze->add_option("--samples", f.samples, "triangles sampled per relation");

  std::string tree_dir;
  int tree_depth = 5;
  std::uint64_t tree_seed = 0;
  auto* make_tree = app.add_subcommand("make-tree", "write the synthetic binary-tree KG");
  make_tree->add_option("--out-dir", tree_dir, "output dataset directory")->required();
  make_tree->add_option("--depth", tree_depth, "levels below the root");
  make_tree->add_option("--seed", tree_seed, "split seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*make_tree) return cmd_make_tree(tree_dir, tree_depth, tree_seed);
    const auto cfg = resolve(f);
    if (*train) return cmd_train(cfg);
    if (*eval) return cmd_eval(cfg);
    if (*ablate) return cmd_ablate(cfg);
    if (*analyze) return cmd_analyze(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
