#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "au2vec/binio.hpp"
#include "au2vec/cluster.hpp"
#include "au2vec/cooccur.hpp"
#include "au2vec/error.hpp"
#include "au2vec/eval.hpp"
#include "au2vec/features.hpp"
#include "au2vec/glove.hpp"
#include "au2vec/ingest.hpp"
#include "au2vec/manifest.hpp"
#include "au2vec/parallel.hpp"
#include "au2vec/synth.hpp"
#include "au2vec/tokenize.hpp"
#include "au2vec/version.hpp"

namespace au2vec::cli {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      if constexpr (std::is_same_v<T, double>) out.push_back(std::stod(item));
      else out.push_back(static_cast<T>(std::stoull(item)));
    } catch (const std::exception&) {
      throw ArgumentError(std::string("bad value '") + item + "' in " + flag);
    }
  }
  if (out.empty()) throw ArgumentError(std::string(flag) + " needs at least one value");
  return out;
}

bool is_corpus_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) return false;
  const auto head = read_file(p).substr(0, 4);
  return head == "AUFC";
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  unsigned workers = 0;

  unsigned resolved_workers() const { return workers ? workers : default_workers(); }
  void log(const std::string& msg) const { err << "[au2vec] " << msg << '\n'; }
};

// ---- stage implementations shared by subcommands and `pipeline` ----

struct IngestArgs {
  std::string input, out;
  double min_confidence = 0.90;
  double target_fps = 5.0;
  double source_fps = 0.0;
};

FrameCorpus do_ingest(const Context& ctx, const IngestArgs& a) {
  IngestOptions opt;
  opt.min_confidence = a.min_confidence;
  opt.target_fps = a.target_fps;
  if (a.source_fps > 0.0) opt.parse.source_fps = a.source_fps;
  opt.workers = ctx.resolved_workers();
  IngestSummary summary;
  auto corpus = ingest_path(a.input, opt, &summary);
  ctx.log("ingest: " + std::to_string(summary.files) + " file(s), " + std::to_string(summary.rows) + " rows, " +
          std::to_string(summary.clamped) + " clamped AU values, " + std::to_string(summary.kept_frames) +
          " frames kept");
  return corpus;
}

struct ClusterArgs {
  std::string corpus, out;
  std::size_t k = 1000;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-6;
};

Codebook do_cluster(const Context& ctx, const FrameCorpus& corpus, const ClusterArgs& a) {
  KMeansOptions opt{a.seed, a.max_iter, a.tol, ctx.resolved_workers(), MergeOrder::kShardOrder};
  auto cb = fit_kmeans(corpus, a.k, opt);
  ctx.log("cluster: k=" + std::to_string(cb.k()) + " inertia=" + num(cb.inertia) + " after " +
          std::to_string(cb.iterations_run) + " iteration(s)");
  return cb;
}

std::string format_elbow(const ElbowCurve& curve, const std::optional<ElbowChoice>& choice) {
  std::string out = "k\tinertia\titerations\tnon_monotone\n";
  for (const auto& p : curve.points) {
    out += std::to_string(p.k) + '\t' + num(p.inertia) + '\t' + std::to_string(p.iterations) + '\t' +
           (p.non_monotone ? "1" : "0") + '\n';
  }
  if (choice) {
    out += "# selected_k\t" + std::to_string(choice->k) + (choice->weak_knee ? "\tweak_knee" : "") + '\n';
  }
  return out;
}

ElbowChoice do_elbow(const Context& ctx, const FrameCorpus& corpus, const std::vector<std::size_t>& ks,
                     std::uint64_t seed, const std::string& report_path, std::size_t max_iter, double tol) {
  const auto points = corpus.pooled();
  KMeansOptions opt{seed, max_iter, tol, ctx.resolved_workers(), MergeOrder::kShardOrder};
  const auto curve = elbow_sweep(points, ks, opt);
  for (const auto& p : curve.points) {
    ctx.log("elbow: k=" + std::to_string(p.k) + " inertia=" + num(p.inertia) +
            (p.non_monotone ? " (inertia rose vs smaller k)" : ""));
  }
  std::optional<ElbowChoice> choice;
  if (curve.points.size() >= 3) {
    choice = select_elbow(curve);
    ctx.log("elbow: selected k=" + std::to_string(choice->k) + (choice->weak_knee ? " (weak knee)" : "") +
            "; override with --k");
  } else {
    ctx.log("elbow: fewer than 3 points, no automatic selection");
  }
  if (!report_path.empty()) write_file(report_path, format_elbow(curve, choice));
  return choice.value_or(ElbowChoice{curve.points.back().k, 0.0, true});
}

struct TokenizeArgs {
  std::string corpus, codebook, out, vocab;
  std::uint32_t min_count = kDefaultMinCount;
  double dist_threshold = kDefaultDistThreshold;
};

std::pair<Vocabulary, TokenCorpus> do_tokenize(const Context& ctx, const FrameCorpus& corpus, const Codebook& cb,
                                               const TokenizeArgs& a) {
  const auto counts = count_cluster_frequencies(corpus, cb, ctx.resolved_workers());
  auto vocab = build_vocabulary(counts, a.min_count, a.dist_threshold);
  TokenizeSummary summary;
  auto tokens = tokenize_corpus(corpus, cb, vocab, ctx.resolved_workers(), &summary);
  ctx.log("tokenize: V=" + std::to_string(vocab.size()) + " (" + std::to_string(vocab.size() - kNumSpecialTokens) +
          " of " + std::to_string(cb.k()) + " clusters retained), " + std::to_string(summary.unk_frames) + " of " +
          std::to_string(summary.frames) + " frames UNK" +
          (summary.skipped_empty ? ", " + std::to_string(summary.skipped_empty) + " empty sequence(s) skipped" : ""));
  return {std::move(vocab), std::move(tokens)};
}

struct TrainArgs {
  std::string cooc, vocab, out, export_path;
  GloveConfig config;
  std::string combine = "sum";
};

Combine parse_combine(const std::string& s) {
  if (s == "sum") return Combine::kSum;
  if (s == "main") return Combine::kMain;
  throw ArgumentError("--combine must be sum or main");
}

EmbeddingModel do_train(const Context& ctx, const CooccurrenceTable& table, const Vocabulary& vocab, TrainArgs a) {
  a.config.workers = ctx.resolved_workers();
  a.config.deterministic = a.config.workers == 1;
  auto result = train(table, vocab, a.config);
  if (!result.epoch_loss.empty()) {
    ctx.log("train-embeddings: dim=" + std::to_string(a.config.dim) + " epochs=" + std::to_string(a.config.epochs) +
            " loss " + num(result.epoch_loss.front()) + " -> " + num(result.epoch_loss.back()));
  } else {
    ctx.log("train-embeddings: empty co-occurrence table, parameters left at initialization");
  }
  return std::move(result.model);
}

std::vector<FeatureVector> compute_features(const Context& ctx, FeatureKind kind, const FrameCorpus* corpus,
                                            const TokenCorpus* tokens, const EmbeddingModel* model,
                                            std::size_t levels) {
  std::vector<FeatureVector> rows;
  std::size_t skipped = 0;
  if (kind == FeatureKind::kPooledEmbedding) {
    for (const auto& seq : *tokens) rows.push_back(pooled_embedding_features(seq, *model));
  } else {
    for (const auto& seq : corpus->sequences) {
      if (seq.frames.size() < 2) {
        ++skipped;
        continue;
      }
      rows.push_back(kind == FeatureKind::kStatic ? static_features(seq) : tron_dynamic_features(seq, levels));
    }
  }
  if (skipped) ctx.log("features: skipped " + std::to_string(skipped) + " sequence(s) with fewer than 2 frames");
  return rows;
}

FeatureTable to_table(FeatureKind kind, std::vector<FeatureVector> rows, std::size_t dim) {
  return {feature_names(kind, dim), std::move(rows)};
}

struct EvalArgs {
  std::string features, labels, out, group_by;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::string lambdas = "0.01,0.1,1,10";
  bool random_baseline = false;
  bool json = false;
  std::size_t repeats = 100;
};

std::string do_evaluate(const Context& ctx, const FeatureTable& table, const std::map<std::string, double>& labels,
                        const EvalArgs& a, const std::string& name) {
  CvOptions opt;
  opt.folds = a.folds;
  opt.seed = a.seed;
  opt.lambdas = parse_list<double>(a.lambdas, "--lambdas");
  opt.target_name = name;
  opt.workers = ctx.resolved_workers();
  if (!a.group_by.empty()) {
    for (const auto& [id, g] : parse_labels(read_file(a.group_by), a.group_by)) opt.groups[id] = num(g);
  }
  const auto report = kfold_cv(table.rows, labels, opt);
  std::optional<BaselineReport> baseline;
  if (a.random_baseline) {
    baseline = random_baseline_cv(report.truth, report.fold_of, a.folds, a.seed, a.repeats);
  }
  ctx.log("evaluate[" + name + "]: pooled PCC=" + num(report.pcc) + " RMSE=" + num(report.rmse) +
          " CCC=" + num(report.ccc) + " over " + std::to_string(report.n_samples) + " videos");
  return a.json ? format_report_json(report, baseline) : format_report_tsv(report, baseline);
}

// ---- manifest helpers ----

struct StageTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::vector<FileRecord> records(const std::vector<fs::path>& paths, const fs::path& base) {
  std::vector<FileRecord> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out.push_back(record_file(f, base));
    } else {
      out.push_back(record_file(p, base));
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, 0};
  CLI::App app{"au2vec: facial action-unit clusters and GloVe-style embeddings", "au2vec"};
  app.set_version_flag("--version", std::string("au2vec ") + kVersion + " (binary formats v" +
                                        std::to_string(kFormatVersion) + ")");
  app.require_subcommand(1);

  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", ctx.workers, "Worker threads (default: CPU count; 1 = deterministic)");
  };

  // ingest
  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Parse OpenFace CSV output into a frame corpus");
  ingest->add_option("--input", ingest_args.input, "CSV file or directory of CSV files")->required();
  ingest->add_option("--out", ingest_args.out, "Output corpus (.aufc)")->required();
  ingest->add_option("--min-confidence", ingest_args.min_confidence, "Drop frames below this tracking confidence");
  ingest->add_option("--target-fps", ingest_args.target_fps, "Decimate to this frame rate");
  ingest->add_option("--source-fps", ingest_args.source_fps, "Source frame rate (default: from timestamps)");
  add_workers(ingest);

  // cluster
  ClusterArgs cluster_args;
  auto* cluster = app.add_subcommand("cluster", "Fit a k-means codebook");
  cluster->add_option("--corpus", cluster_args.corpus)->required();
  cluster->add_option("--k", cluster_args.k, "Cluster count")->required();
  cluster->add_option("--seed", cluster_args.seed)->required();
  cluster->add_option("--out", cluster_args.out, "Output codebook (.aukm)")->required();
  cluster->add_option("--max-iter", cluster_args.max_iter);
  cluster->add_option("--tol", cluster_args.tol);
  add_workers(cluster);

  // elbow
  std::string elbow_corpus, elbow_ks, elbow_report;
  std::uint64_t elbow_seed = 0;
  std::size_t elbow_max_iter = 300;
  double elbow_tol = 1e-6;
  auto* elbow = app.add_subcommand("elbow", "Sweep k and report the inertia curve");
  elbow->add_option("--corpus", elbow_corpus)->required();
  elbow->add_option("--ks", elbow_ks, "Comma-separated, strictly increasing k values")->required();
  elbow->add_option("--seed", elbow_seed)->required();
  elbow->add_option("--report", elbow_report, "Output TSV")->required();
  elbow->add_option("--max-iter", elbow_max_iter);
  elbow->add_option("--tol", elbow_tol);
  add_workers(elbow);

  // tokenize
  TokenizeArgs tok_args;
  auto* tokenize = app.add_subcommand("tokenize", "Map frames to cluster tokens with START/END/UNK");
  tokenize->add_option("--corpus", tok_args.corpus)->required();
  tokenize->add_option("--codebook", tok_args.codebook)->required();
  tokenize->add_option("--min-count", tok_args.min_count,
                       "Clusters with fewer raw assignments map to UNK (500 suits multi-million-frame corpora; "
                       "scale it down proportionally for small corpora)");
  tokenize->add_option("--dist-threshold", tok_args.dist_threshold,
                       "Frames farther than this from their centroid map to UNK");
  tokenize->add_option("--out", tok_args.out, "Output token corpus (.autk)")->required();
  tokenize->add_option("--vocab", tok_args.vocab, "Output vocabulary (.auvb)")->required();
  add_workers(tokenize);

  // cooccur
  std::string cooc_tokens, cooc_vocab, cooc_out;
  std::uint32_t cooc_window = kDefaultWindow;
  bool cooc_uniform = false;
  auto* cooccur = app.add_subcommand("cooccur", "Accumulate the symmetric co-occurrence table");
  cooccur->add_option("--tokens", cooc_tokens)->required();
  cooccur->add_option("--vocab", cooc_vocab)->required();
  cooccur->add_option("--window", cooc_window, "Context tokens per side");
  cooccur->add_option("--out", cooc_out, "Output table (.auco)")->required();
  cooccur->add_flag("--uniform", cooc_uniform, "Weight every in-window pair 1 instead of 1/distance");
  add_workers(cooccur);

  // train-embeddings
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train-embeddings", "Train GloVe embeddings with AdaGrad");
  train_cmd->add_option("--cooc", train_args.cooc)->required();
  train_cmd->add_option("--vocab", train_args.vocab)->required();
  train_cmd->add_option("--dim", train_args.config.dim);
  train_cmd->add_option("--epochs", train_args.config.epochs);
  train_cmd->add_option("--seed", train_args.config.seed)->required();
  train_cmd->add_option("--x-max", train_args.config.x_max);
  train_cmd->add_option("--alpha", train_args.config.alpha);
  train_cmd->add_option("--lr", train_args.config.learning_rate);
  train_cmd->add_option("--out", train_args.out, "Output checkpoint (.augv)")->required();
  train_cmd->add_option("--export", train_args.export_path, "Also write text vectors here");
  train_cmd->add_option("--combine", train_args.combine, "Exported vector: sum (W + W~) or main (W)");
  add_workers(train_cmd);

  // neighbors
  std::string nb_model, nb_vocab, nb_vectors, nb_token;
  std::size_t nb_n = 10;
  auto* neighbors = app.add_subcommand("neighbors", "Nearest tokens by cosine similarity");
  neighbors->add_option("--model", nb_model, "Checkpoint (.augv)");
  neighbors->add_option("--vocab", nb_vocab, "Vocabulary (default: vocab.auvb next to the model)");
  neighbors->add_option("--vectors", nb_vectors, "Exported text vectors instead of a checkpoint");
  neighbors->add_option("--token", nb_token, "Query token, e.g. c17 or <UNK>")->required();
  neighbors->add_option("--n", nb_n);

  // features
  std::string feat_kind, feat_corpus, feat_tokens, feat_model, feat_vocab, feat_out;
  std::size_t feat_levels = kDefaultActivityLevels;
  auto* features = app.add_subcommand("features", "Per-video feature vectors");
  features->add_option("--kind", feat_kind, "static | dynamic | pooled")->required();
  features->add_option("--corpus", feat_corpus);
  features->add_option("--tokens", feat_tokens);
  features->add_option("--model", feat_model);
  features->add_option("--vocab", feat_vocab);
  features->add_option("--levels", feat_levels, "Activity levels for dynamic features");
  features->add_option("--out", feat_out)->required();

  // evaluate
  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated ridge regression report");
  evaluate->add_option("--features", eval_args.features)->required();
  evaluate->add_option("--labels", eval_args.labels)->required();
  evaluate->add_option("--folds", eval_args.folds);
  evaluate->add_option("--seed", eval_args.seed)->required();
  evaluate->add_option("--lambdas", eval_args.lambdas, "Comma-separated ridge penalties");
  evaluate->add_flag("--random-baseline", eval_args.random_baseline, "Add the label-resampling baseline");
  evaluate->add_option("--repeats", eval_args.repeats, "Random-baseline repeats");
  evaluate->add_option("--group-by", eval_args.group_by, "TSV video_id<TAB>group; groups share folds");
  evaluate->add_flag("--json", eval_args.json, "Write JSON instead of TSV");
  evaluate->add_option("--out", eval_args.out, "Report path (default: standard output)");
  add_workers(evaluate);

  // synth
  SynthConfig synth_cfg;
  std::string synth_out, synth_labels, synth_truth;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted states");
  synth->add_option("--n-states", synth_cfg.n_states);
  synth->add_option("--n-videos", synth_cfg.n_videos);
  synth->add_option("--frames", synth_cfg.frames_per_video);
  synth->add_option("--fps", synth_cfg.fps);
  synth->add_option("--sigma", synth_cfg.noise_sigma);
  synth->add_option("--stay-prob", synth_cfg.transition_stay_prob);
  synth->add_option("--seed", synth_cfg.seed)->required();
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--labels", synth_labels);
  synth->add_option("--truth", synth_truth);

  // pipeline
  std::string pl_input, pl_labels, pl_out_dir = "au2vec_out", pl_elbow_ks, pl_kinds = "static,dynamic,pooled";
  std::optional<std::size_t> pl_k;
  std::uint64_t pl_seed = 0;
  IngestArgs pl_ingest;
  TokenizeArgs pl_tok;
  std::uint32_t pl_window = kDefaultWindow;
  bool pl_uniform = false;
  GloveConfig pl_glove;
  EvalArgs pl_eval;
  std::size_t pl_levels = kDefaultActivityLevels;
  auto* pipeline = app.add_subcommand("pipeline", "ingest -> cluster -> tokenize -> cooccur -> train -> features -> evaluate");
  pipeline->add_option("--input", pl_input, "CSV file/directory or an .aufc corpus")->required();
  pipeline->add_option("--labels", pl_labels, "Labels TSV; enables the evaluate stage");
  pipeline->add_option("--out-dir", pl_out_dir);
  pipeline->add_option("--seed", pl_seed)->required();
  pipeline->add_option("--k", pl_k, "Cluster count (default 1000, or elbow choice when --elbow-ks is set)");
  pipeline->add_option("--elbow-ks", pl_elbow_ks, "Run an elbow sweep over these k first");
  pipeline->add_option("--min-confidence", pl_ingest.min_confidence);
  pipeline->add_option("--target-fps", pl_ingest.target_fps);
  pipeline->add_option("--source-fps", pl_ingest.source_fps);
  pipeline->add_option("--min-count", pl_tok.min_count);
  pipeline->add_option("--dist-threshold", pl_tok.dist_threshold);
  pipeline->add_option("--window", pl_window);
  pipeline->add_flag("--uniform", pl_uniform);
  pipeline->add_option("--dim", pl_glove.dim);
  pipeline->add_option("--epochs", pl_glove.epochs);
  pipeline->add_option("--features", pl_kinds, "Comma-separated feature kinds to evaluate");
  pipeline->add_option("--levels", pl_levels);
  pipeline->add_option("--folds", pl_eval.folds);
  pipeline->add_option("--lambdas", pl_eval.lambdas);
  add_workers(pipeline);

  // verify-manifest
  std::string vm_path;
  auto* verify = app.add_subcommand("verify-manifest", "Recompute and check the digests in a pipeline manifest");
  verify->add_option("--manifest", vm_path)->required();

  std::vector<const char*> argv{"au2vec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*ingest) {
      write_corpus(do_ingest(ctx, ingest_args), ingest_args.out);
    } else if (*cluster) {
      write_codebook(do_cluster(ctx, read_corpus(cluster_args.corpus), cluster_args), cluster_args.out);
    } else if (*elbow) {
      do_elbow(ctx, read_corpus(elbow_corpus), parse_list<std::size_t>(elbow_ks, "--ks"), elbow_seed, elbow_report,
               elbow_max_iter, elbow_tol);
    } else if (*tokenize) {
      const auto corpus = read_corpus(tok_args.corpus);
      const auto cb = read_codebook(tok_args.codebook);
      const auto [vocab, tokens] = do_tokenize(ctx, corpus, cb, tok_args);
      write_vocabulary(vocab, tok_args.vocab);
      write_tokens(tokens, tok_args.out);
    } else if (*cooccur) {
      const auto vocab = read_vocabulary(cooc_vocab);
      const auto tokens = read_tokens(cooc_tokens);
      const auto table = build_cooccurrence(tokens, static_cast<std::uint32_t>(vocab.size()), cooc_window,
                                            cooc_uniform ? Weighting::kUniform : Weighting::kInverseDistance,
                                            ctx.resolved_workers());
      ctx.log("cooccur: " + std::to_string(table.cell_count()) + " nonzero cells, window " +
              std::to_string(cooc_window));
      write_cooccurrence(table, cooc_out);
    } else if (*train_cmd) {
      const auto table = read_cooccurrence(train_args.cooc);
      const auto vocab = read_vocabulary(train_args.vocab);
      const auto combine = parse_combine(train_args.combine);
      const auto model = do_train(ctx, table, vocab, train_args);
      write_model(model, train_args.out);
      if (!train_args.export_path.empty()) export_embeddings(model, vocab, train_args.export_path, combine);
    } else if (*neighbors) {
      EmbeddingTable table;
      if (!nb_vectors.empty()) {
        table = read_embeddings(nb_vectors);
      } else if (!nb_model.empty()) {
        fs::path vocab_path = nb_vocab;
        if (vocab_path.empty()) vocab_path = fs::path(nb_model).parent_path() / "vocab.auvb";
        if (!fs::exists(vocab_path)) throw ArgumentError("no vocabulary found; pass --vocab");
        table = make_embedding_table(read_model(nb_model), read_vocabulary(vocab_path));
      } else {
        throw ArgumentError("neighbors needs --model or --vectors");
      }
      for (const auto& nb : nearest_neighbors(table, nb_token, nb_n)) {
        out << nb.name << '\t' << num(nb.similarity) << '\n';
      }
    } else if (*features) {
      const auto kind = parse_feature_kind(feat_kind);
      FeatureTable table;
      if (kind == FeatureKind::kPooledEmbedding) {
        if (feat_tokens.empty() || feat_model.empty()) throw ArgumentError("pooled features need --tokens and --model");
        const auto tokens = read_tokens(feat_tokens);
        const auto model = read_model(feat_model);
        if (!feat_vocab.empty() && read_vocabulary(feat_vocab).size() != model.vocab_size) {
          throw FormatError(feat_vocab + ": vocabulary size does not match model");
        }
        table = to_table(kind, compute_features(ctx, kind, nullptr, &tokens, &model, feat_levels), model.dim);
      } else {
        if (feat_corpus.empty()) throw ArgumentError(std::string(to_string(kind)) + " features need --corpus");
        const auto corpus = read_corpus(feat_corpus);
        table = to_table(kind, compute_features(ctx, kind, &corpus, nullptr, nullptr, feat_levels), 0);
      }
      write_feature_table(table, feat_out);
      ctx.log("features: " + std::to_string(table.rows.size()) + " row(s) of " + std::to_string(table.columns.size()) +
              " " + std::string(to_string(kind)) + " features");
    } else if (*evaluate) {
      const auto table = read_feature_table(eval_args.features);
      const auto labels = read_labels(eval_args.labels);
      const auto report = do_evaluate(ctx, table, labels, eval_args, fs::path(eval_args.labels).stem().string());
      if (eval_args.out.empty()) out << report;
      else write_file(eval_args.out, report);
    } else if (*synth) {
      const auto data = generate(synth_cfg);
      write_corpus(data.corpus, synth_out);
      if (!synth_labels.empty()) write_file(synth_labels, format_labels(data.label_map()));
      if (!synth_truth.empty()) write_file(synth_truth, format_truth(data));
      ctx.log("synth: " + std::to_string(data.corpus.sequences.size()) + " videos, " +
              std::to_string(data.corpus.total_frames()) + " frames, " + std::to_string(synth_cfg.n_states) +
              " states");
    } else if (*pipeline) {
      const fs::path dir = pl_out_dir;
      fs::create_directories(dir);
      PipelineManifest manifest;
      manifest.tool_version = kVersion;
      auto stage = [&](const std::string& name, const std::vector<fs::path>& ins, const std::vector<fs::path>& outs,
                       std::map<std::string, std::string> params, const StageTimer& t) {
        manifest.stages.push_back({name, records(ins, dir), records(outs, dir), std::move(params), t.seconds()});
      };

      const fs::path corpus_path = dir / "corpus.aufc";
      StageTimer t;
      FrameCorpus corpus;
      if (is_corpus_file(pl_input)) {
        corpus = read_corpus(pl_input);
        ctx.log("ingest: using pre-built corpus " + pl_input + " (" + std::to_string(corpus.total_frames()) +
                " frames)");
      } else {
        pl_ingest.input = pl_input;
        corpus = do_ingest(ctx, pl_ingest);
      }
      write_corpus(corpus, corpus_path);
      stage("ingest", {pl_input}, {corpus_path},
            {{"min_confidence", num(pl_ingest.min_confidence)}, {"target_fps", num(pl_ingest.target_fps)}}, t);

      std::size_t k = pl_k.value_or(1000);
      if (!pl_elbow_ks.empty()) {
        t = {};
        const fs::path elbow_path = dir / "elbow.tsv";
        const auto choice =
            do_elbow(ctx, corpus, parse_list<std::size_t>(pl_elbow_ks, "--elbow-ks"), pl_seed, elbow_path.string(), 300, 1e-6);
        if (!pl_k) k = choice.k;
        stage("elbow", {corpus_path}, {elbow_path}, {{"ks", pl_elbow_ks}, {"seed", std::to_string(pl_seed)}}, t);
      }

      t = {};
      ClusterArgs ca;
      ca.k = k;
      ca.seed = pl_seed;
      const auto cb = do_cluster(ctx, corpus, ca);
      const fs::path cb_path = dir / "codebook.aukm";
      write_codebook(cb, cb_path);
      stage("cluster", {corpus_path}, {cb_path}, {{"k", std::to_string(k)}, {"seed", std::to_string(pl_seed)}}, t);

      t = {};
      const auto [vocab, tokens] = do_tokenize(ctx, corpus, cb, pl_tok);
      const fs::path vocab_path = dir / "vocab.auvb", tokens_path = dir / "tokens.autk";
      write_vocabulary(vocab, vocab_path);
      write_tokens(tokens, tokens_path);
      stage("tokenize", {corpus_path, cb_path}, {vocab_path, tokens_path},
            {{"min_count", std::to_string(pl_tok.min_count)}, {"dist_threshold", num(pl_tok.dist_threshold)}}, t);

      t = {};
      const auto table = build_cooccurrence(tokens, static_cast<std::uint32_t>(vocab.size()), pl_window,
                                            pl_uniform ? Weighting::kUniform : Weighting::kInverseDistance,
                                            ctx.resolved_workers());
      const fs::path cooc_path = dir / "cooc.auco";
      write_cooccurrence(table, cooc_path);
      ctx.log("cooccur: " + std::to_string(table.cell_count()) + " nonzero cells");
      stage("cooccur", {tokens_path, vocab_path}, {cooc_path},
            {{"window", std::to_string(pl_window)}, {"weighting", pl_uniform ? "uniform" : "inverse_distance"}}, t);

      t = {};
      TrainArgs ta;
      ta.config = pl_glove;
      ta.config.seed = pl_seed;
      const auto model = do_train(ctx, table, vocab, ta);
      const fs::path model_path = dir / "model.augv", vectors_path = dir / "vectors.txt";
      write_model(model, model_path);
      export_embeddings(model, vocab, vectors_path);
      stage("train-embeddings", {cooc_path, vocab_path}, {model_path, vectors_path},
            {{"dim", std::to_string(pl_glove.dim)}, {"epochs", std::to_string(pl_glove.epochs)},
             {"seed", std::to_string(pl_seed)}},
            t);

      std::map<std::string, double> labels;
      if (!pl_labels.empty()) labels = read_labels(pl_labels);
      for (const auto& kind_name : [&] {
             std::vector<std::string> v;
             std::stringstream ss(pl_kinds);
             for (std::string s; std::getline(ss, s, ',');) if (!s.empty()) v.push_back(s);
             return v;
           }()) {
        const auto kind = parse_feature_kind(kind_name);
        t = {};
        const auto rows = compute_features(ctx, kind, &corpus, &tokens, &model, pl_levels);
        const auto ftable = to_table(kind, rows, model.dim);
        const fs::path feat_path = dir / ("features_" + kind_name + ".tsv");
        write_feature_table(ftable, feat_path);
        std::vector<fs::path> feat_inputs = kind == FeatureKind::kPooledEmbedding
                                                ? std::vector<fs::path>{tokens_path, model_path}
                                                : std::vector<fs::path>{corpus_path};
        stage("features:" + kind_name, feat_inputs, {feat_path}, {{"kind", kind_name}}, t);

        if (!pl_labels.empty()) {
          t = {};
          EvalArgs ea = pl_eval;
          ea.seed = pl_seed;
          ea.random_baseline = true;
          const fs::path report_path = dir / ("report_" + kind_name + ".tsv");
          write_file(report_path, do_evaluate(ctx, ftable, labels, ea, kind_name));
          stage("evaluate:" + kind_name, {feat_path, pl_labels}, {report_path},
                {{"folds", std::to_string(ea.folds)}, {"lambdas", ea.lambdas}, {"seed", std::to_string(pl_seed)}}, t);
        }
      }
      write_manifest(manifest, dir / "manifest.json");
      ctx.log("pipeline: wrote " + (dir / "manifest.json").string());
    } else if (*verify) {
      const auto manifest = read_manifest(vm_path);
      const auto problems = verify_manifest(manifest, fs::path(vm_path).parent_path());
      for (const auto& p : problems) err << p << '\n';
      if (!problems.empty()) return kDataError;
      ctx.log("manifest OK");
    }
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kDataError;
  } catch (const LookupError& e) {
    err << "lookup error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace au2vec::cli
