// siman: command-line front end for the binarization toolkit.
//
// Subcommands: binarize, dist, train, kernel-bench. Every run with an --out
// target also writes <out>.manifest recording the exact invocation, so any
// CSV can be traced back to the flags and seed that produced it.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "siman/binarize.hpp"
#include "siman/bitkernel.hpp"
#include "siman/data_io.hpp"
#include "siman/dist.hpp"
#include "siman/train.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

void write_manifest(const std::string& out_path, const std::string& subcommand,
                    const json& flags, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  json m;
  m["subcommand"] = subcommand;
  m["flags"] = flags;
  m["seed"] = seed;
  m["toolkit_version"] = kVersion;
  m["outputs"] = outputs;
  std::ofstream f(out_path + ".manifest");
  f << m.dump(2) << "\n";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_binarize(const std::string& input, const std::string& random_spec,
                 const std::string& mode, bool oracle, const std::string& out) {
  siman::WeightVector w;
  std::uint64_t seed = 0;
  if (!input.empty()) {
    std::ifstream f(input);
    if (!f) {
      std::cerr << "cannot open " << input << "\n";
      return 1;
    }
    double x;
    while (f >> x) w.push_back(x);
    if (w.empty()) {
      std::cerr << "no numbers in " << input << "\n";
      return 2;
    }
  } else {
    auto parts = split(random_spec, ',');
    if (parts.size() != 3) {
      std::cerr << "--random expects n,dist,seed\n";
      return 2;
    }
    std::size_t n = std::stoull(parts[0]);
    seed = std::stoull(parts[2]);
    siman::DistributionModel model;
    if (parts[1] == "laplace") {
      model.kind = siman::DistributionModel::Kind::laplace;
    } else if (parts[1] == "gauss") {
      model.kind = siman::DistributionModel::Kind::gauss;
    } else {
      std::cerr << "unknown distribution " << parts[1] << "\n";
      return 2;
    }
    w = siman::sample_weights(model, n, seed);
  }

  json rec;
  rec["mode"] = mode;
  rec["n"] = w.size();
  if (mode == "sign") {
    siman::SignCode code = siman::sign_binarize_scaled(w);
    std::string bits(code.bits.size(), '0');
    double norm = 0.0, sum_abs = 0.0;
    std::vector<double> dir(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      bits[i] = code.bits[i] > 0 ? '+' : '-';
      dir[i] = code.bits[i];
      norm += w[i] * w[i];
      sum_abs += std::fabs(w[i]);
    }
    rec["bits"] = bits;
    rec["scale"] = code.scale;
    rec["cosine"] = sum_abs / (std::sqrt(norm) * std::sqrt(static_cast<double>(w.size())));
    rec["quantization_error"] = siman::quantization_error(w, dir);
  } else {
    siman::BinaryCode code =
        mode == "optimal" ? siman::optimal_binarize(w) : siman::half_half_binarize(w);
    std::string bits(code.bits.size(), '0');
    std::vector<double> abs_w(w.size()), dir(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (code.bits[i]) bits[i] = '1';
      abs_w[i] = std::fabs(w[i]);
      dir[i] = code.bits[i];
    }
    double cosine = siman::objective_value(w, code);
    double norm = 0.0;
    for (double x : w) norm += x * x;
    rec["bits"] = bits;
    rec["k"] = code.ones;
    rec["cosine"] = cosine;
    rec["objective"] = cosine * std::sqrt(norm);  // the unnormalized L_k
    rec["quantization_error"] = siman::quantization_error(abs_w, dir);
    if (oracle) {
      if (w.size() > 16) {
        std::cerr << "--oracle requires n <= 16\n";
        return 2;
      }
      siman::BinaryCode ref = siman::brute_force_binarize(w);
      double ref_obj = siman::objective_value(w, ref);
      rec["oracle"] =
          std::fabs(cosine - ref_obj) <= 1e-12 ? std::string("match") : std::string("MISMATCH");
    }
  }

  std::string line = rec.dump();
  std::cout << line << "\n";
  if (!out.empty()) {
    std::ofstream f(out);
    f << line << "\n";
    json flags{{"input", input}, {"random", random_spec}, {"mode", mode}, {"oracle", oracle}};
    write_manifest(out, "binarize", flags, seed, {out});
  }
  return 0;
}

int cmd_dist(const std::string& kind, double scale, const std::string& montecarlo,
             const std::string& out) {
  siman::DistributionModel model;
  if (kind == "laplace") {
    model.kind = siman::DistributionModel::Kind::laplace;
  } else if (kind == "gauss") {
    model.kind = siman::DistributionModel::Kind::gauss;
  } else {
    std::cerr << "--kind must be laplace or gauss\n";
    return 2;
  }
  model.scale = scale;

  siman::ThresholdResult r = siman::optimal_threshold(model);
  std::ostringstream csv;
  std::uint64_t seed = 0;
  csv << "kind,scale,t_star,p_plus";
  if (!montecarlo.empty()) csv << ",empirical_p";
  csv << "\n"
      << kind << "," << format_double(scale) << "," << format_double(r.t_star) << ","
      << format_double(r.p_plus);
  if (!montecarlo.empty()) {
    auto parts = split(montecarlo, ',');
    if (parts.size() != 2) {
      std::cerr << "--montecarlo expects n,seed\n";
      return 2;
    }
    std::size_t n = std::stoull(parts[0]);
    seed = std::stoull(parts[1]);
    auto w = siman::sample_weights(model, n, seed);
    csv << "," << format_double(siman::empirical_plus_fraction(w));
  }
  csv << "\n";

  std::cout << csv.str();
  if (!out.empty()) {
    std::ofstream f(out);
    f << csv.str();
    json flags{{"kind", kind}, {"scale", scale}, {"montecarlo", montecarlo}};
    write_manifest(out, "dist", flags, seed, {out});
  }
  return 0;
}

struct TrainArgs {
  std::string dataset;
  std::string mode = "siman";
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  std::size_t batch = 64;
  double lr = 0.1;
  double momentum = 0.9;
  double decay_other = 5e-4;
  double decay_binarized = -1.0;  // -1: use the mode's default
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  bool no_augment = false;
  std::string out = "run";
};

int cmd_train(const TrainArgs& a) {
  siman::BinMode bin_mode;
  double default_bin_decay;
  if (a.mode == "siman") {
    bin_mode = siman::BinMode::siman;
    default_bin_decay = 0.0;
  } else if (a.mode == "siman1") {
    bin_mode = siman::BinMode::siman1;
    default_bin_decay = 5e-4;
  } else if (a.mode == "siman2") {
    bin_mode = siman::BinMode::siman1;  // optimal code, decay removed
    default_bin_decay = 0.0;
  } else if (a.mode == "siman3") {
    bin_mode = siman::BinMode::siman;  // half-half code, decay kept
    default_bin_decay = 5e-4;
  } else if (a.mode == "sign") {
    bin_mode = siman::BinMode::sign_baseline;
    default_bin_decay = 5e-4;
  } else {
    std::cerr << "--mode must be siman|siman1|siman2|siman3|sign\n";
    return 2;
  }

  siman::Dataset train_ds, test_ds;
  siman::ModelSpec spec;
  bool augment = !a.no_augment;
  auto head = split(a.dataset, ':');
  if (head.size() != 2) {
    std::cerr << "--dataset expects cifar10:DIR or synth:classes,dim,train_per_class,"
                 "test_per_class,separation,seed\n";
    return 2;
  }
  if (head[0] == "cifar10") {
    train_ds = siman::load_cifar10_train_dir(head[1]);
    test_ds = siman::load_cifar10_test_dir(head[1]);
    siman::normalize_per_channel(train_ds, siman::kCifar10Mean, siman::kCifar10Std);
    siman::normalize_per_channel(test_ds, siman::kCifar10Mean, siman::kCifar10Std);
    spec.in_c = 3;
    spec.in_h = 32;
    spec.in_w = 32;
    spec.classes = 10;
  } else if (head[0] == "synth") {
    auto p = split(head[1], ',');
    if (p.size() != 6) {
      std::cerr << "synth spec: classes,dim,train_per_class,test_per_class,separation,seed\n";
      return 2;
    }
    std::size_t classes = std::stoull(p[0]);
    std::size_t dim = std::stoull(p[1]);
    std::size_t per_train = std::stoull(p[2]);
    std::size_t per_test = std::stoull(p[3]);
    double separation = std::stod(p[4]);
    std::uint64_t dseed = std::stoull(p[5]);
    // Factor dim as 3 x s x s so the conv stack applies; dim = 3*s*s required.
    std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(dim / 3.0)));
    if (3 * side * side != dim) {
      std::cerr << "synth dim must be 3*s*s (e.g. 48 = 3*4*4)\n";
      return 2;
    }
    auto all = siman::synth_blobs(classes, dim, per_train + per_test, separation, dseed);
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t i = 0; i < per_train + per_test; ++i) {
        auto& dst = i < per_train ? train_ds : test_ds;
        dst.samples.push_back(all[c * (per_train + per_test) + i]);
      }
    }
    train_ds.classes = test_ds.classes = classes;
    train_ds.channels = test_ds.channels = 3;
    train_ds.height = test_ds.height = side;
    train_ds.width = test_ds.width = side;
    spec.in_c = 3;
    spec.in_h = side;
    spec.in_w = side;
    spec.classes = classes;
    augment = false;
  } else {
    std::cerr << "unknown dataset kind " << head[0] << "\n";
    return 2;
  }
  if (a.train_limit > 0 && a.train_limit < train_ds.samples.size())
    train_ds.samples.resize(a.train_limit);
  if (a.test_limit > 0 && a.test_limit < test_ds.samples.size())
    test_ds.samples.resize(a.test_limit);

  spec.bin_mode = bin_mode;
  siman::TrainConfig config;
  config.learning_rate = a.lr;
  config.momentum = a.momentum;
  config.epochs = a.epochs;
  config.batch_size = a.batch;
  config.weight_decay_other = a.decay_other;
  config.weight_decay_binarized = a.decay_binarized >= 0.0 ? a.decay_binarized : default_bin_decay;
  config.seed = a.seed;

  siman::ConvNetS model(spec);
  model.init_params(a.seed);
  auto metrics = siman::train(model, train_ds, test_ds, config, augment);

  std::string metrics_path = a.out + "_metrics.csv";
  std::string layers_path = a.out + "_layers.csv";
  std::string ckpt_path = a.out + ".ckpt";
  {
    std::ofstream f(metrics_path);
    f << "epoch,lr,train_loss,train_acc,test_acc,mean_p_plus,mean_cos_siman,mean_cos_sign\n";
    for (const auto& m : metrics) {
      f << m.epoch << "," << format_double(m.lr) << "," << format_double(m.train_loss) << ","
        << format_double(m.train_acc) << "," << format_double(m.test_acc) << ","
        << format_double(m.mean_p_plus) << "," << format_double(m.mean_cos_siman) << ","
        << format_double(m.mean_cos_sign) << "\n";
    }
  }
  {
    std::ofstream f(layers_path);
    f << "layer,filter,n,p_plus,cos_siman,cos_siman_pm1,cos_sign,qerr_siman,qerr_sign\n";
    for (const auto& ls : siman::layer_stats(model)) {
      for (std::size_t i = 0; i < ls.filters.size(); ++i) {
        const auto& fs = ls.filters[i];
        f << ls.layer_index << "," << i << "," << ls.filter_length << ","
          << format_double(fs.p_plus) << "," << format_double(fs.cos_siman) << ","
          << format_double(fs.cos_siman_pm1) << "," << format_double(fs.cos_sign) << ","
          << format_double(fs.qerr_siman) << "," << format_double(fs.qerr_sign) << "\n";
      }
    }
  }
  siman::CheckpointMeta meta;
  meta.learning_rate = config.learning_rate;
  meta.momentum = config.momentum;
  meta.weight_decay_other = config.weight_decay_other;
  meta.weight_decay_binarized = config.weight_decay_binarized;
  meta.epochs = config.epochs;
  meta.batch_size = config.batch_size;
  meta.seed = config.seed;
  siman::save_checkpoint(model, meta, ckpt_path);

  json flags{{"dataset", a.dataset},
             {"mode", a.mode},
             {"epochs", a.epochs},
             {"batch", a.batch},
             {"lr", a.lr},
             {"momentum", a.momentum},
             {"decay_other", config.weight_decay_other},
             {"decay_binarized", config.weight_decay_binarized},
             {"train_limit", a.train_limit},
             {"test_limit", a.test_limit},
             {"augment", augment}};
  write_manifest(a.out, "train", flags, a.seed, {metrics_path, layers_path, ckpt_path});

  if (!metrics.empty()) {
    const auto& last = metrics.back();
    std::cout << "final: train_acc=" << format_double(last.train_acc)
              << " test_acc=" << format_double(last.test_acc)
              << " mean_p_plus=" << format_double(last.mean_p_plus) << "\n";
  } else {
    std::cout << "final: checkpoint written at initialization (0 epochs)\n";
  }
  return 0;
}

int cmd_kernel_bench(const std::string& sizes, std::size_t reps, std::uint64_t seed,
                     const std::string& out) {
  siman::Rng rng(seed);
  std::ostringstream csv;
  csv << "op,n_or_shape,rep,ns_per_op,exact\n";

  for (const std::string& tok : split(sizes, ',')) {
    std::size_t n = std::stoull(tok);
    if (n < 1) {
      std::cerr << "sizes must be >= 1\n";
      return 2;
    }
    std::vector<double> av(n), bv(n);
    for (std::size_t i = 0; i < n; ++i) {
      av[i] = rng.next_double() < 0.5 ? -1.0 : 1.0;
      bv[i] = rng.next_double() < 0.5 ? -1.0 : 1.0;
    }
    siman::BitVector a = siman::pack_signs(av);
    siman::BitVector b = siman::pack_signs(bv);

    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) ref += av[i] * bv[i];
    std::int64_t got = siman::binary_dot(a, b);
    bool exact = static_cast<double>(got) == ref;
    if (!exact) {
      std::cerr << "exactness check failed at n=" << n << "\n";
      return 1;
    }

    std::size_t inner = std::max<std::size_t>(1, 65536 / n);
    volatile std::int64_t sink = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < inner; ++i) sink = sink + siman::binary_dot(a, b);
      auto t1 = std::chrono::steady_clock::now();
      double ns = std::chrono::duration<double, std::nano>(t1 - t0).count() /
                  static_cast<double>(inner);
      csv << "binary_dot," << n << "," << rep << "," << format_double(ns) << ",true\n";
    }
    (void)sink;
  }

  std::cout << csv.str();
  if (!out.empty()) {
    std::ofstream f(out);
    f << csv.str();
    json flags{{"n", sizes}, {"reps", reps}};
    write_manifest(out, "kernel-bench", flags, seed, {out});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SiMaN binarization toolkit"};
  app.require_subcommand(1);

  // binarize
  auto* bin = app.add_subcommand("binarize", "binarize a weight vector");
  std::string bin_input, bin_random, bin_mode = "optimal", bin_out;
  bool bin_oracle = false;
  auto* in_opt = bin->add_option("--input", bin_input, "file of whitespace-separated weights");
  auto* rnd_opt = bin->add_option("--random", bin_random, "n,dist,seed (dist: laplace|gauss)");
  in_opt->excludes(rnd_opt);
  bin->add_option("--mode", bin_mode, "optimal|half|sign")
      ->check(CLI::IsMember({"optimal", "half", "sign"}));
  bin->add_flag("--oracle", bin_oracle, "cross-check against brute force (n <= 16)");
  bin->add_option("--out", bin_out, "also write the record to this file");

  // dist
  auto* dist = app.add_subcommand("dist", "closed-form threshold analytics");
  std::string dist_kind, dist_mc, dist_out;
  double dist_scale = 1.0;
  dist->add_option("--kind", dist_kind, "laplace|gauss")->required();
  dist->add_option("--scale", dist_scale, "b (laplace) or sigma (gauss)");
  dist->add_option("--montecarlo", dist_mc, "n,seed");
  dist->add_option("--out", dist_out, "CSV output path");

  // train
  auto* tr = app.add_subcommand("train", "train ConvNet-S");
  TrainArgs ta;
  tr->add_option("--dataset", ta.dataset,
                 "cifar10:DIR or synth:classes,dim,train_pc,test_pc,separation,seed")
      ->required();
  tr->add_option("--mode", ta.mode, "siman|siman1|siman2|siman3|sign");
  tr->add_option("--epochs", ta.epochs, "epoch count")->required();
  tr->add_option("--seed", ta.seed, "RNG seed");
  tr->add_option("--batch", ta.batch, "batch size");
  tr->add_option("--lr", ta.lr, "initial learning rate");
  tr->add_option("--momentum", ta.momentum, "SGD momentum");
  tr->add_option("--decay-other", ta.decay_other, "l2 on non-binarized layers");
  tr->add_option("--decay-binarized", ta.decay_binarized, "override l2 on binarized layers");
  tr->add_option("--train-limit", ta.train_limit, "cap training samples");
  tr->add_option("--test-limit", ta.test_limit, "cap test samples");
  tr->add_flag("--no-augment", ta.no_augment, "disable crop/flip augmentation");
  tr->add_option("--out", ta.out, "output prefix");

  // kernel-bench
  auto* kb = app.add_subcommand("kernel-bench", "time the XNOR/popcount kernels");
  std::string kb_sizes = "64,1000,4096", kb_out;
  std::size_t kb_reps = 10;
  std::uint64_t kb_seed = 0;
  kb->add_option("--n", kb_sizes, "comma-separated bit lengths");
  kb->add_option("--reps", kb_reps, "timing repetitions per size");
  kb->add_option("--seed", kb_seed, "RNG seed");
  kb->add_option("--out", kb_out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (bin->parsed()) {
      if (bin_input.empty() == bin_random.empty()) {
        std::cerr << "exactly one of --input / --random is required\n";
        return 2;
      }
      return cmd_binarize(bin_input, bin_random, bin_mode, bin_oracle, bin_out);
    }
    if (dist->parsed()) return cmd_dist(dist_kind, dist_scale, dist_mc, dist_out);
    if (tr->parsed()) return cmd_train(ta);
    if (kb->parsed()) return cmd_kernel_bench(kb_sizes, kb_reps, kb_seed, kb_out);
  } catch (const siman::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
