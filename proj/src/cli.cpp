#include "cedit/cli.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cedit/analysis.hpp"
#include "cedit/errors.hpp"
#include "cedit/io.hpp"
#include "cedit/kernels.hpp"
#include "cedit/remote.hpp"
#include "cedit/stain.hpp"

namespace cedit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BackendError*>(&e)) return kBackend;
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const CLI::Error*>(&e)) return kUsage;
  return kData;
}

std::unique_ptr<Predictor> open_predictor(std::string_view spec) {
  if (is_remote_spec(spec)) return std::make_unique<RemotePredictor>(resolve_endpoint(spec));
  return std::make_unique<ReferenceClassifier>(ReferenceClassifier::load(fs::path(spec)));
}

std::unique_ptr<Editor> open_editor(std::string_view spec) {
  if (is_remote_spec(spec)) return std::make_unique<RemoteEditor>(resolve_endpoint(spec));
  return std::make_unique<ReferenceInfiller>(ReferenceInfiller::load(fs::path(spec)));
}

std::unique_ptr<FluencyScorer> open_fluency(std::string_view spec) {
  if (is_remote_spec(spec)) return std::make_unique<RemoteFluencyScorer>(resolve_endpoint(spec));
  return std::make_unique<ReferenceNgramScorer>(ReferenceNgramScorer::load(fs::path(spec)));
}

// ---------------------------------------------------------------------------
// Ablation grid

std::string AblationCondition::name() const {
  return std::string(stage1_labels ? "Label" : "NoLabel") + "/" +
         (stage2_labels ? "Label" : "NoLabel") + " " +
         (strategy == MaskStrategy::Gradient ? "Grad" : "Rand");
}

std::string AblationCondition::key() const {
  return std::string(stage1_labels ? "label" : "nolabel") + "-" +
         (stage2_labels ? "label" : "nolabel") + "-" +
         (strategy == MaskStrategy::Gradient ? "grad" : "rand");
}

std::vector<AblationCondition> default_ablation_conditions() {
  return {{true, true, MaskStrategy::Gradient},
          {true, false, MaskStrategy::Gradient},
          {false, true, MaskStrategy::Gradient},
          {false, false, MaskStrategy::Gradient},
          {true, true, MaskStrategy::Random}};
}

AblationCondition parse_ablation_condition(std::string_view key) {
  const auto bad = [&] {
    return ConfigError("bad ablation condition '" + std::string(key) +
                       "' (expected e.g. label-nolabel-grad)");
  };
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == '-') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) throw bad();
  const auto flag = [&](const std::string& s) {
    if (s == "label") return true;
    if (s == "nolabel") return false;
    throw bad();
  };
  return {flag(parts[0]), flag(parts[1]), parse_mask_strategy(parts[2])};
}

std::vector<AblationRow> run_ablation(std::span<const EditJob> inputs, const Predictor& f,
                                      const Editor& label_editor, const Editor& nolabel_editor,
                                      const FluencyScorer* scorer, const SearchOptions& base,
                                      std::span<const AblationCondition> conditions, int jobs) {
  std::vector<AblationRow> rows;
  for (const auto& cond : conditions) {
    SearchOptions opts = base;
    opts.label_infill = cond.stage2_labels;
    opts.strategy = cond.strategy;
    const Editor& ed = cond.stage1_labels ? label_editor : nolabel_editor;
    const auto outcomes = run_edits(inputs, f, ed, opts, std::nullopt, jobs);
    AblationRow row{cond, evaluate(outcomes, scorer), {}};
    for (const auto& o : outcomes) row.counters += o.counters;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fmt3(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << *v;
  return s.str();
}

}  // namespace

std::string ablation_markdown(std::span<const AblationRow> rows) {
  std::ostringstream out;
  out << "| Condition | Flip Rate | Minim. | Fluen. | Instances |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << r.condition.name() << " | " << fmt3(r.report.flip_rate) << " | "
        << fmt3(r.report.mean_minimality) << " | " << fmt3(r.report.mean_fluency) << " | "
        << r.report.instances << " |\n";
  }
  return out.str();
}

std::string ablation_json(std::span<const AblationRow> rows) {
  json j = json::array();
  for (const auto& r : rows) {
    j.push_back({{"condition", r.condition.key()},
                 {"name", r.condition.name()},
                 {"summary", json::parse(r.report.summary_json())},
                 {"counters",
                  {{"predictor_forward_calls", r.counters.predictor_forward_calls},
                   {"editor_samples", r.counters.editor_samples},
                   {"attribution_calls", r.counters.attribution_calls}}}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Command plumbing

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string output;
};

void add_common(CLI::App* sub, Common& c, bool needs_output = true) {
  sub->add_option("--config", c.config, "key = value run configuration file")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "seed for search, training and data generation");
  sub->add_option("--jobs", c.jobs, "instances processed in parallel")->check(CLI::PositiveNumber);
  auto* o = sub->add_option("--output", c.output, "run directory");
  if (needs_output) o->required();
}

RunConfig load_run_config(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  if (c.seed) {
    cfg.search.cfg.rng_seed = *c.seed;
    cfg.train.rng_seed = *c.seed;
    cfg.synth.rng_seed = *c.seed;
  }
  return cfg;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json backend_entry(const std::string& spec) {
  if (spec.empty()) return nullptr;
  if (is_remote_spec(spec)) return {{"kind", "remote"}, {"endpoint", resolve_endpoint(spec).base_url}};
  return {{"kind", "local"}, {"path", spec}};
}

// Run manifest written next to every command's outputs.
class Manifest {
 public:
  Manifest(std::string command, int argc, const char* const* argv, const RunConfig& cfg)
      : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["argv"] = std::vector<std::string>(argv, argv + argc);
    j_["config"] = dump_config(cfg);
    j_["seed"] = cfg.search.cfg.rng_seed;
    j_["started_at"] = utc_now();
    j_["openmp_threads"] = kernels::max_threads();
  }

  json& operator[](const char* key) { return j_[key]; }

  void counters(const Counters& c) {
    j_["counters"] = {{"predictor_forward_calls", c.predictor_forward_calls},
                      {"editor_samples", c.editor_samples},
                      {"attribution_calls", c.attribution_calls}};
  }

  void write(const fs::path& dir) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j_["elapsed_seconds"] = secs;
    write_file(dir / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  std::chrono::steady_clock::time_point start_;
  json j_;
};

std::vector<EditJob> to_jobs(const std::vector<LabeledExample>& data, std::size_t limit) {
  std::vector<EditJob> jobs;
  for (const auto& ex : data) {
    if (limit && jobs.size() >= limit) break;
    jobs.push_back({ex.id, preprocess(ex.text)});
  }
  return jobs;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive editing: minimal, fluent edits that flip a classifier"};
  app.name("cedit");
  app.require_subcommand(1);

  // datagen
  Common dg;
  std::optional<std::size_t> dg_n, dg_test;
  std::optional<double> dg_rho;
  auto* datagen = app.add_subcommand("datagen", "write a synthetic review corpus");
  add_common(datagen, dg);
  datagen->add_option("--n", dg_n, "training examples");
  datagen->add_option("--test-size", dg_test, "held-out examples (default n/4)");
  datagen->add_option("--rating-probability", dg_rho, "chance of a trailing r/10 token");

  // train-predictor
  Common tp;
  std::string tp_data, tp_heldout;
  auto* train_pred = app.add_subcommand("train-predictor", "train the reference classifier");
  add_common(train_pred, tp);
  train_pred->add_option("--data", tp_data, "training JSONL")->required()->check(CLI::ExistingFile);
  train_pred->add_option("--heldout", tp_heldout, "JSONL used to report accuracy")
      ->check(CLI::ExistingFile);

  // train-editor
  Common te;
  std::string te_data;
  bool te_nolabel = false;
  auto* train_ed = app.add_subcommand("train-editor", "train the reference infiller");
  add_common(train_ed, te);
  train_ed->add_option("--data", te_data, "training JSONL")->required()->check(CLI::ExistingFile);
  train_ed->add_flag("--no-labels", te_nolabel, "pool counts over labels");

  // train-fluency
  Common tf;
  std::string tf_data;
  auto* train_fl = app.add_subcommand("train-fluency", "train the reference fluency scorer");
  add_common(train_fl, tf);
  train_fl->add_option("--data", tf_data, "training JSONL")->required()->check(CLI::ExistingFile);

  // edit
  Common ed;
  std::string ed_data, ed_pred, ed_editor, ed_fluency, ed_masker, ed_contrast, ed_attr;
  std::size_t ed_limit = 0;
  bool ed_nolabel = false;
  auto* edit = app.add_subcommand("edit", "search contrastive edits for every instance");
  add_common(edit, ed);
  edit->add_option("--data", ed_data, "instances JSONL")->required()->check(CLI::ExistingFile);
  edit->add_option("--predictor", ed_pred, "checkpoint path or http URL")->required();
  edit->add_option("--editor", ed_editor, "checkpoint path or http URL")->required();
  edit->add_option("--fluency", ed_fluency, "checkpoint path or http URL");
  edit->add_option("--masker", ed_masker, "gradient or random");
  edit->add_option("--contrast-label", ed_contrast, "fixed contrast label");
  edit->add_option("--attribution-target", ed_attr, "predicted or contrast");
  edit->add_flag("--no-target-label", ed_nolabel, "infill without the contrast label");
  edit->add_option("--limit", ed_limit, "only the first N instances");

  // evaluate
  Common ev;
  std::string ev_outcomes, ev_fluency;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "metrics for an outcome file");
  add_common(evaluate_cmd, ev);
  evaluate_cmd->add_option("--outcomes", ev_outcomes, "outcomes JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--fluency", ev_fluency, "checkpoint path or http URL");

  // ablate
  Common ab;
  std::string ab_data, ab_pred, ab_editor, ab_editor_nl, ab_fluency;
  std::vector<std::string> ab_conditions;
  std::size_t ab_limit = 0;
  auto* ablate = app.add_subcommand("ablate", "label-condition and masker grid");
  add_common(ablate, ab);
  ablate->add_option("--data", ab_data, "instances JSONL")->required()->check(CLI::ExistingFile);
  ablate->add_option("--predictor", ab_pred, "checkpoint path or http URL")->required();
  ablate->add_option("--editor", ab_editor, "label-trained editor")->required();
  ablate->add_option("--editor-nolabel", ab_editor_nl, "editor trained without labels")
      ->required();
  ablate->add_option("--fluency", ab_fluency, "checkpoint path or http URL");
  ablate->add_option("--conditions", ab_conditions, "rows, e.g. label-label-grad")->delimiter(',');
  ablate->add_option("--limit", ab_limit, "only the first N instances");

  // analyze
  Common an;
  std::string an_outcomes;
  ArtifactFilter an_filter;
  auto* analyze = app.add_subcommand("analyze", "rank tokens removed and inserted by edits");
  add_common(analyze, an);
  analyze->add_option("--outcomes", an_outcomes, "outcomes JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--min-count", an_filter.min_count, "minimum corpus occurrences");
  analyze->add_option("--max-minimality", an_filter.max_minimality, "edit size filter");
  analyze->add_option("--top-n", an_filter.top_n, "tokens per ranking");

  // stain
  Common st;
  std::string st_data, st_label, st_phrase(kDefaultStainPhrase), st_outcomes;
  double st_fraction = 0.10;
  auto* stain = app.add_subcommand("stain", "plant a phrase, or measure how often edits add it");
  add_common(stain, st);
  stain->add_option("--data", st_data, "training JSONL to stain")->check(CLI::ExistingFile);
  stain->add_option("--label", st_label, "label the phrase is tied to");
  stain->add_option("--fraction", st_fraction, "share of the whole corpus to stain");
  stain->add_option("--phrase", st_phrase, "stain phrase");
  stain->add_option("--outcomes", st_outcomes, "measure the stain rate of these outcomes")
      ->check(CLI::ExistingFile);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kUsage;
    }

    if (datagen->parsed()) {
      RunConfig cfg = load_run_config(dg);
      if (dg_n) cfg.synth.n_examples = *dg_n;
      if (dg_rho) cfg.synth.rating_probability = *dg_rho;
      const std::size_t n_train = cfg.synth.n_examples;
      const std::size_t n_test = dg_test.value_or(n_train / 4);
      cfg.synth.n_examples = n_train + n_test;
      auto all = generate_synthetic_reviews(cfg.synth);
      std::vector<LabeledExample> train(all.begin(), all.begin() + n_train);
      std::vector<LabeledExample> test(all.begin() + n_train, all.end());
      const LabelSpace labels(kSentimentLabels);
      const fs::path dir(dg.output);
      write_dataset(dir / "train.jsonl", train, labels);
      write_dataset(dir / "test.jsonl", test, labels);
      Manifest m("datagen", argc, argv, cfg);
      m["outputs"] = {"train.jsonl", "test.jsonl"};
      m["train_examples"] = train.size();
      m["test_examples"] = test.size();
      m.write(dir);
      out << "wrote " << train.size() << " training and " << test.size() << " held-out examples to "
          << dir.string() << "\n";
      return kOk;
    }

    if (train_pred->parsed()) {
      const RunConfig cfg = load_run_config(tp);
      const Dataset ds = read_dataset(tp_data);
      const auto model = train_reference_classifier(ds.examples, ds.labels, cfg.train);
      const fs::path dir(tp.output);
      fs::create_directories(dir);
      model.save(dir / "predictor.json");
      Manifest m("train-predictor", argc, argv, cfg);
      m["data"] = tp_data;
      m["training_accuracy"] = accuracy(model, ds.examples);
      if (!tp_heldout.empty()) {
        const Dataset held = read_dataset(tp_heldout);
        const double acc = accuracy(model, held.examples);
        m["heldout_accuracy"] = acc;
        out << "held-out accuracy " << acc << "\n";
      }
      m.write(dir);
      out << "wrote " << (dir / "predictor.json").string() << "\n";
      return kOk;
    }

    if (train_ed->parsed()) {
      const RunConfig cfg = load_run_config(te);
      const Dataset ds = read_dataset(te_data);
      const auto model = train_reference_infiller(ds.examples, !te_nolabel, cfg.infiller);
      const fs::path dir(te.output);
      fs::create_directories(dir);
      model.save(dir / "editor.json");
      Manifest m("train-editor", argc, argv, cfg);
      m["data"] = te_data;
      m["use_labels"] = !te_nolabel;
      m.write(dir);
      out << "wrote " << (dir / "editor.json").string() << "\n";
      return kOk;
    }

    if (train_fl->parsed()) {
      const RunConfig cfg = load_run_config(tf);
      const Dataset ds = read_dataset(tf_data);
      const auto model = train_reference_scorer(ds.examples, cfg.infiller.weights);
      const fs::path dir(tf.output);
      fs::create_directories(dir);
      model.save(dir / "fluency.json");
      Manifest m("train-fluency", argc, argv, cfg);
      m["data"] = tf_data;
      m.write(dir);
      out << "wrote " << (dir / "fluency.json").string() << "\n";
      return kOk;
    }

    if (edit->parsed()) {
      RunConfig cfg = load_run_config(ed);
      if (!ed_masker.empty()) cfg.search.strategy = parse_mask_strategy(ed_masker);
      if (!ed_attr.empty()) cfg.search.attribution = parse_attribution_target(ed_attr);
      if (ed_nolabel) cfg.search.label_infill = false;
      cfg.search.validate();
      const Dataset ds = read_dataset(ed_data);
      const auto jobs = to_jobs(ds.examples, ed_limit);
      const auto f = open_predictor(ed_pred);
      const auto editor = open_editor(ed_editor);
      const auto scorer = ed_fluency.empty() ? nullptr : open_fluency(ed_fluency);
      std::optional<std::string> contrast;
      if (!ed_contrast.empty()) {
        f->labels().index_of(ed_contrast);
        contrast = ed_contrast;
      }

      Manifest m("edit", argc, argv, cfg);
      m["backends"] = {{"predictor", backend_entry(ed_pred)},
                       {"editor", backend_entry(ed_editor)},
                       {"fluency", backend_entry(ed_fluency)}};
      m["data"] = ed_data;
      m["jobs"] = ed.jobs;
      m["contrast_label"] = contrast ? json(*contrast) : json(nullptr);

      const auto outcomes = run_edits(jobs, *f, *editor, cfg.search, contrast, ed.jobs);
      const fs::path dir(ed.output);
      write_outcomes(dir / "outcomes.jsonl", outcomes);
      const MetricsReport report = evaluate(outcomes, scorer.get());
      write_file(dir / "metrics.jsonl", report.rows_jsonl());
      write_file(dir / "summary.json", report.summary_json() + "\n");
      Counters total;
      std::size_t failed = 0;
      for (const auto& o : outcomes) {
        total += o.counters;
        failed += o.error ? 1 : 0;
      }
      m.counters(total);
      m["failed_instances"] = failed;
      m.write(dir);
      out << "instances " << report.instances << ", flip rate " << fmt3(report.flip_rate)
          << ", mean minimality " << fmt3(report.mean_minimality) << ", mean fluency "
          << fmt3(report.mean_fluency) << "\n";
      if (failed) {
        err << failed << " instance(s) failed on a backend error; see outcomes.jsonl\n";
        return kBackend;
      }
      return kOk;
    }

    if (evaluate_cmd->parsed()) {
      const RunConfig cfg = load_run_config(ev);
      const auto outcomes = read_outcomes(ev_outcomes);
      const auto scorer = ev_fluency.empty() ? nullptr : open_fluency(ev_fluency);
      const MetricsReport report = evaluate(outcomes, scorer.get());
      const fs::path dir(ev.output);
      write_file(dir / "metrics.jsonl", report.rows_jsonl());
      write_file(dir / "summary.json", report.summary_json() + "\n");
      Manifest m("evaluate", argc, argv, cfg);
      m["outcomes"] = ev_outcomes;
      m["backends"] = {{"fluency", backend_entry(ev_fluency)}};
      m.write(dir);
      out << report.summary_json() << "\n";
      return kOk;
    }

    if (ablate->parsed()) {
      const RunConfig cfg = load_run_config(ab);
      const Dataset ds = read_dataset(ab_data);
      const auto jobs = to_jobs(ds.examples, ab_limit);
      const auto f = open_predictor(ab_pred);
      const auto label_editor = open_editor(ab_editor);
      const auto nolabel_editor = open_editor(ab_editor_nl);
      const auto scorer = ab_fluency.empty() ? nullptr : open_fluency(ab_fluency);
      std::vector<AblationCondition> conds;
      for (const auto& k : ab_conditions) conds.push_back(parse_ablation_condition(k));
      if (conds.empty()) conds = default_ablation_conditions();

      Manifest m("ablate", argc, argv, cfg);
      const auto rows =
          run_ablation(jobs, *f, *label_editor, *nolabel_editor, scorer.get(), cfg.search, conds,
                       ab.jobs);
      const fs::path dir(ab.output);
      write_file(dir / "ablation.md", ablation_markdown(rows));
      write_file(dir / "ablation.json", ablation_json(rows) + "\n");
      m["backends"] = {{"predictor", backend_entry(ab_pred)},
                       {"editor", backend_entry(ab_editor)},
                       {"editor_nolabel", backend_entry(ab_editor_nl)},
                       {"fluency", backend_entry(ab_fluency)}};
      Counters total;
      for (const auto& r : rows) total += r.counters;
      m.counters(total);
      m.write(dir);
      out << ablation_markdown(rows);
      return kOk;
    }

    if (analyze->parsed()) {
      const RunConfig cfg = load_run_config(an);
      const auto outcomes = read_outcomes(an_outcomes);
      const ArtifactReport rep = artifact_stats(outcomes, an_filter);
      const fs::path dir(an.output);
      write_file(dir / "artifacts.json", rep.to_json() + "\n");
      write_file(dir / "artifacts.md", rep.to_markdown());
      Manifest m("analyze", argc, argv, cfg);
      m["outcomes"] = an_outcomes;
      m.write(dir);
      out << rep.to_markdown();
      return kOk;
    }

    if (stain->parsed()) {
      const RunConfig cfg = load_run_config(st);
      const fs::path dir(st.output);
      Manifest m("stain", argc, argv, cfg);
      const TokenSeq phrase = tokenize(st_phrase);
      if (!st_outcomes.empty()) {
        const auto outcomes = read_outcomes(st_outcomes);
        const double rate = stain_rate(outcomes, phrase);
        write_file(dir / "stain_rate.json",
                   json{{"phrase", phrase.str()}, {"rate", rate}, {"outcomes", outcomes.size()}}
                           .dump(2) +
                       "\n");
        m["outcomes"] = st_outcomes;
        m.write(dir);
        out << "stain rate " << rate << "\n";
        return kOk;
      }
      if (st_data.empty() || st_label.empty()) {
        throw ConfigError("stain needs --data and --label, or --outcomes");
      }
      const Dataset ds = read_dataset(st_data);
      StainSpec spec{phrase, st_label, st_fraction};
      Rng rng(cfg.search.cfg.rng_seed);
      const StainResult res = stain_corpus(ds.examples, spec, rng);
      write_dataset(dir / "stained.jsonl", res.data, ds.labels);
      write_file(dir / "stain_manifest.json", res.manifest_json(spec) + "\n");
      m["data"] = st_data;
      m.write(dir);
      out << "stained " << res.stained_ids.size() << " of " << res.data.size() << " examples";
      if (res.shortfall) out << " (" << res.shortfall << " short of the requested fraction)";
      out << "\n";
      return kOk;
    }
  } catch (const std::exception& e) {
    err << "cedit: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace cedit::cli
