// mrsquant: MEGA-PRESS spectral quantification workbench.
//
// Subcommands cover the full workflow: gen-basis -> gen-dataset -> train ->
// quantify / evaluate. Every command writes a run manifest beside its outputs
// and all randomness flows from explicit --seed flags.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mrs/basis.hpp"
#include "mrs/datagen.hpp"
#include "mrs/eval.hpp"
#include "mrs/fitting.hpp"
#include "mrs/nn.hpp"
#include "mrs/preprocess.hpp"
#include "mrs/scanfile.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ManifestWriter {
    json doc;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    ManifestWriter(const std::string& command, const json& config) {
        doc["tool"] = std::string("mrsquant ") + kVersion;
        doc["command"] = command;
        doc["config"] = config;
        doc["inputs"] = json::array();
        doc["outputs"] = json::array();
        doc["warnings"] = json::array();
    }

    void input(const std::string& path) { doc["inputs"].push_back(path); }
    void output(const std::string& path) { doc["outputs"].push_back(path); }
    void warn(const std::string& message) {
        doc["warnings"].push_back(message);
        std::cerr << "warning: " << message << "\n";
    }

    void write(const std::string& path) {
        const auto elapsed = std::chrono::steady_clock::now() - started;
        doc["duration_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        std::ofstream out(path);
        if (!out) throw mrs::Error("cannot write manifest: " + path);
        out << doc.dump(2) << "\n";
    }
};

mrs::PpmWindow parse_window(const std::string& text) {
    mrs::PpmWindow w;
    if (text.empty()) return w;
    double high, low;
    int bins;
    if (std::sscanf(text.c_str(), "%lf,%lf,%d", &high, &low, &bins) != 3 || high <= low ||
        bins < 1)
        throw UsageError("--window expects HIGH,LOW,BINS with HIGH > LOW");
    w.high_ppm = high;
    w.low_ppm = low;
    w.bins = bins;
    return w;
}

std::vector<std::string> expand_basis_paths(const std::vector<std::string>& paths) {
    std::vector<std::string> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.path().extension() == ".mrsbasis") found.push_back(entry.path().string());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw mrs::NoBasis("no basis archives found");
    return files;
}

// "train=5000,val=1000" -> ordered (split, count) pairs
std::vector<std::pair<mrs::Split, int>> parse_split(const std::string& text) {
    std::vector<std::pair<mrs::Split, int>> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--split expects name=count pairs");
        int count = 0;
        try {
            count = std::stoi(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw UsageError("--split count is not a number: " + item);
        }
        if (count < 0) throw UsageError("--split counts must be >= 0");
        mrs::Split split;
        try {
            split = mrs::split_from_name(item.substr(0, eq));
        } catch (const mrs::Error& e) {
            throw UsageError(e.what());
        }
        if (count > 0) out.emplace_back(split, count);
    }
    if (out.empty()) throw UsageError("--split names no non-empty archives");
    return out;
}

mrs::InputConfig input_config_or_usage(const std::string& acquisitions,
                                       const std::string& components,
                                       const mrs::PpmWindow& window) {
    try {
        return mrs::parse_input_config(acquisitions, components, window);
    } catch (const mrs::Error& e) {
        throw UsageError(e.what());
    }
}

// --- gen-basis -------------------------------------------------------------------

int cmd_gen_basis(const std::string& defs, const std::vector<double>& linewidths,
                  const std::string& out_dir, const std::string& window_text,
                  const std::string& source_tag) {
    ManifestWriter manifest("gen-basis", {{"defs", defs},
                                          {"linewidths", linewidths},
                                          {"out", out_dir},
                                          {"window", window_text},
                                          {"source_tag", source_tag}});
    const mrs::PpmWindow window = parse_window(window_text);

    std::vector<mrs::MetaboliteModel> models;
    if (defs.empty()) {
        models = mrs::default_models();
    } else {
        models = mrs::load_model_definitions(defs);
        manifest.input(defs);
    }

    const auto sets = mrs::build_basis(models, linewidths, window, mrs::SynthesisInfo{}, source_tag);
    fs::create_directories(out_dir);
    for (const auto& set : sets) {
        std::ostringstream name;
        name << source_tag << "-" << set.linewidth_hz << "hz.mrsbasis";
        const std::string path = (fs::path(out_dir) / name.str()).string();
        mrs::save_basis(set, path);
        manifest.output(path);
        std::cout << "wrote " << path << "\n";
    }
    manifest.write((fs::path(out_dir) / "gen-basis.manifest.json").string());
    return kExitOk;
}

// --- gen-dataset -----------------------------------------------------------------

int cmd_gen_dataset(const std::vector<std::string>& basis_paths, int count, uint64_t seed,
                    double noisy_fraction, const std::string& split_text,
                    const std::string& out_dir) {
    ManifestWriter manifest("gen-dataset", {{"basis", basis_paths},
                                            {"count", count},
                                            {"seed", seed},
                                            {"noisy_fraction", noisy_fraction},
                                            {"split", split_text},
                                            {"out", out_dir}});
    if (noisy_fraction < 0.0 || noisy_fraction > 1.0)
        throw UsageError("--noisy-fraction must be in [0, 1]");

    auto splits = parse_split(split_text.empty() ? "train=" + std::to_string(count) : split_text);
    int total = 0;
    for (const auto& [split, n] : splits) total += n;
    if (count > 0 && total != count)
        throw UsageError("--split counts sum to " + std::to_string(total) +
                         ", --count says " + std::to_string(count));

    std::vector<mrs::BasisSet> bases;
    for (const auto& file : expand_basis_paths(basis_paths)) {
        bases.push_back(mrs::load_basis(file));
        manifest.input(file);
    }

    fs::create_directories(out_dir);
    uint64_t start_index = 0;
    for (const auto& [split, n] : splits) {
        mrs::Dataset data = mrs::generate_dataset(bases, n, seed, noisy_fraction, start_index);
        data.split = split;
        start_index += uint64_t(n);
        const std::string path =
            (fs::path(out_dir) / (std::string(mrs::split_name(split)) + ".mrsdata")).string();
        mrs::save_dataset(data, path);
        manifest.output(path);
        std::cout << "wrote " << path << " (" << n << " samples)\n";
    }
    manifest.write((fs::path(out_dir) / "gen-dataset.manifest.json").string());
    return kExitOk;
}

// --- train -----------------------------------------------------------------------

int cmd_train(const std::string& train_path, const std::string& val_path,
              const std::string& size, const std::string& reduction,
              const std::string& acquisitions, const std::string& components, int batch,
              int epochs, double channel_scale, double learning_rate, uint64_t seed,
              const std::string& out_path) {
    ManifestWriter manifest("train", {{"train", train_path},
                                      {"val", val_path},
                                      {"size", size},
                                      {"reduction", reduction},
                                      {"acquisitions", acquisitions},
                                      {"components", components},
                                      {"batch", batch},
                                      {"epochs", epochs},
                                      {"channel_scale", channel_scale},
                                      {"learning_rate", learning_rate},
                                      {"seed", seed},
                                      {"out", out_path}});

    mrs::nn::NetworkConfig net_cfg;
    try {
        net_cfg.size = mrs::nn::size_from_name(size);
        net_cfg.reduction = mrs::nn::reduction_from_name(reduction);
    } catch (const mrs::Error& e) {
        throw UsageError(e.what());
    }
    if (batch < 1) throw UsageError("--batch must be >= 1");
    if (epochs < 1) throw UsageError("--epochs must be >= 1");
    if (!(channel_scale > 0.0 && channel_scale <= 1.0))
        throw UsageError("--channel-scale must be in (0, 1]");

    const mrs::Dataset train_data = mrs::load_dataset(train_path);
    const mrs::Dataset val_data = mrs::load_dataset(val_path);
    manifest.input(train_path);
    manifest.input(val_path);

    const mrs::InputConfig input_cfg =
        input_config_or_usage(acquisitions, components, train_data.window);
    net_cfg.input_rows = input_cfg.rows();
    net_cfg.input_cols = train_data.window.bins;
    net_cfg.output_dim = int(train_data.metabolite_order.size());
    net_cfg.channel_scale = channel_scale;

    mrs::nn::Network net = mrs::nn::build_network(net_cfg, seed);

    mrs::nn::TrainConfig tc;
    tc.learning_rate = learning_rate;
    tc.batch_size = batch;
    tc.max_epochs = epochs;
    tc.seed = seed;

    const std::string history_path = out_path + ".history.tsv";
    mrs::nn::TrainHistory history;
    try {
        history = mrs::nn::train(net, train_data, val_data, tc, input_cfg);
    } catch (const mrs::nn::TrainingDiverged& e) {
        std::ofstream hist(history_path);
        hist << "epoch\ttrain_loss\tval_loss\n";
        for (const auto& rec : e.history.epochs)
            hist << rec.epoch << "\t" << rec.train_loss << "\t" << rec.val_loss << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }

    mrs::nn::save_checkpoint(net, out_path);
    manifest.output(out_path);
    {
        std::ofstream hist(history_path);
        hist << "epoch\ttrain_loss\tval_loss\n";
        for (const auto& rec : history.epochs)
            hist << rec.epoch << "\t" << rec.train_loss << "\t" << rec.val_loss << "\n";
        manifest.output(history_path);
    }
    manifest.doc["result"] = {{"epochs_run", history.epochs.size()},
                              {"best_epoch", history.best_epoch},
                              {"best_val_loss", history.best_val_loss},
                              {"early_stopped", history.early_stopped}};
    manifest.write(out_path + ".manifest.json");
    std::cout << "trained " << history.epochs.size() << " epochs, best validation loss "
              << history.best_val_loss << " at epoch " << history.best_epoch << "\n";
    return kExitOk;
}

// --- quantify ---------------------------------------------------------------------

int cmd_quantify(const std::string& model_path, const std::vector<std::string>& spectra,
                 const std::string& format, const std::string& out_path,
                 double butterworth_cutoff) {
    ManifestWriter manifest("quantify", {{"model", model_path},
                                         {"spectra", spectra},
                                         {"format", format},
                                         {"out", out_path},
                                         {"butterworth", butterworth_cutoff}});
    if (format != "report" && format != "tsv")
        throw UsageError("--format must be report or tsv");

    mrs::nn::Network net = mrs::nn::load_checkpoint(model_path);
    manifest.input(model_path);

    json results = json::array();
    bool any_failed = false;
    for (const auto& path : spectra) {
        try {
            const mrs::Scan scan = mrs::load_scan(path);
            const mrs::Sample sample = mrs::preprocess_scan(
                scan.acquisitions, net.input_config.window, butterworth_cutoff, scan.carrier_ppm);
            mrs::AssembleReport rep;
            const mrs::InputTensor x =
                mrs::assemble_input(sample, net.input_config, {}, &rep);
            if (!rep.b0_peak_found)
                manifest.warn("no usable reference peak in " + path + "; B0 correction skipped");
            const auto prediction = net.predict(x);
            json entry;
            entry["file"] = path;
            entry["concentrations"] = prediction;
            results.push_back(std::move(entry));
            manifest.input(path);
        } catch (const mrs::Error& e) {
            std::cerr << "error: " << path << ": " << e.what() << "\n";
            any_failed = true;
        }
    }

    std::ostringstream body;
    if (format == "tsv") {
        body.precision(12);
        body << "file";
        for (const auto& name : net.labels) body << "\t" << name;
        body << "\n";
        for (const auto& entry : results) {
            body << entry["file"].get<std::string>();
            for (const auto& name : net.labels)
                body << "\t" << entry["concentrations"][name].get<double>();
            body << "\n";
        }
    } else {
        json doc;
        doc["model"] = model_path;
        doc["predictions"] = results;
        body << doc.dump(2) << "\n";
    }

    if (out_path.empty()) {
        std::cout << body.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw mrs::Error("cannot write: " + out_path);
        out << body.str();
        manifest.output(out_path);
        manifest.write(out_path + ".manifest.json");
    }
    return any_failed ? kExitData : kExitOk;
}

// --- evaluate ---------------------------------------------------------------------

mrs::Dataset load_phantom_dataset(const std::string& manifest_path,
                                  const std::vector<std::string>& metabolite_order,
                                  const mrs::PpmWindow& window, double butterworth_cutoff,
                                  ManifestWriter& manifest) {
    std::ifstream in(manifest_path);
    if (!in) throw mrs::Error("cannot open phantom manifest: " + manifest_path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw mrs::Error("cannot parse phantom manifest: " + std::string(e.what()));
    }

    mrs::Dataset data;
    data.metabolite_order = metabolite_order;
    data.window = window;
    data.basis_tag = "phantom:" + fs::path(manifest_path).stem().string();
    const fs::path base = fs::path(manifest_path).parent_path();
    try {
        for (const auto& jscan : doc.at("scans")) {
            const std::string rel = jscan.at("path").get<std::string>();
            const std::string path = (base / rel).string();
            const mrs::Scan scan = mrs::load_scan(path);
            manifest.input(path);
            mrs::Sample sample =
                mrs::preprocess_scan(scan.acquisitions, window, butterworth_cutoff, scan.carrier_ppm);

            double total = 0.0;
            for (const auto& name : metabolite_order) {
                const auto& jconc = jscan.at("concentrations");
                sample.raw[name] = jconc.contains(name) ? jconc.at(name).get<double>() : 0.0;
                total += sample.raw[name];
            }
            if (total <= 0.0)
                throw mrs::Error("phantom scan " + rel + " lists no positive concentrations");
            for (const auto& name : metabolite_order)
                sample.label[name] = sample.raw[name] / total;
            data.samples.push_back(std::move(sample));
        }
    } catch (const json::exception& e) {
        throw mrs::Error("bad phantom manifest: " + std::string(e.what()));
    }
    if (data.samples.empty()) throw mrs::Error("phantom manifest lists no scans");
    return data;
}

int cmd_evaluate(const std::string& model_path, const std::string& baseline,
                 const std::vector<std::string>& basis_paths, const std::string& dataset_path,
                 const std::string& phantom_path, const std::string& reduce_list, bool merge_glx,
                 const std::string& sigma_mode_name, const std::string& acquisitions,
                 const std::string& components, double butterworth_cutoff,
                 const std::string& out_path) {
    ManifestWriter manifest("evaluate", {{"model", model_path},
                                         {"baseline", baseline},
                                         {"basis", basis_paths},
                                         {"dataset", dataset_path},
                                         {"phantom_manifest", phantom_path},
                                         {"reduce", reduce_list},
                                         {"merge_glx", merge_glx},
                                         {"sigma_mode", sigma_mode_name},
                                         {"acquisitions", acquisitions},
                                         {"components", components},
                                         {"out", out_path}});
    if (model_path.empty() == baseline.empty())
        throw UsageError("choose exactly one of --model or --baseline");
    if (!baseline.empty() && baseline != "nnls")
        throw UsageError("the only supported baseline is nnls");
    if (dataset_path.empty() == phantom_path.empty())
        throw UsageError("choose exactly one of --dataset or --phantom-manifest");

    mrs::SigmaMode sigma_mode;
    try {
        sigma_mode = mrs::sigma_mode_from_name(sigma_mode_name);
    } catch (const mrs::Error& e) {
        throw UsageError(e.what());
    }
    mrs::ReductionOptions reduction;
    reduction.merge_glx = merge_glx;
    if (!reduce_list.empty()) {
        std::istringstream ss(reduce_list);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) reduction.keep.push_back(item);
    }

    // assemble the quantifier
    std::unique_ptr<mrs::nn::Network> net;
    std::unique_ptr<mrs::BasisSet> basis;
    std::unique_ptr<mrs::Quantifier> quantifier;
    mrs::PpmWindow window;
    if (!model_path.empty()) {
        net = std::make_unique<mrs::nn::Network>(mrs::nn::load_checkpoint(model_path));
        manifest.input(model_path);
        window = net->input_config.window;
        quantifier = std::make_unique<mrs::NetworkQuantifier>(*net);
    } else {
        if (basis_paths.empty()) throw UsageError("--baseline nnls needs --basis");
        const auto files = expand_basis_paths(basis_paths);
        basis = std::make_unique<mrs::BasisSet>(mrs::load_basis(files.front()));
        manifest.input(files.front());
        if (files.size() > 1)
            manifest.warn("multiple basis archives given; nnls uses " + files.front());
        window = basis->window;
        const mrs::InputConfig cfg = input_config_or_usage(acquisitions, components, window);
        quantifier = std::make_unique<mrs::NnlsQuantifier>(*basis, cfg);
    }

    mrs::Dataset data;
    if (!dataset_path.empty()) {
        data = mrs::load_dataset(dataset_path);
        manifest.input(dataset_path);
        if (data.samples.empty()) throw UsageError("dataset is empty");
        if (!(data.window == window))
            throw mrs::ShapeError("dataset window does not match the quantifier window");
    } else {
        data = load_phantom_dataset(phantom_path, quantifier->labels(), window,
                                    butterworth_cutoff, manifest);
        manifest.input(phantom_path);
    }

    mrs::EvaluationReport report;
    try {
        report = mrs::evaluate(*quantifier, data, reduction, sigma_mode);
    } catch (const mrs::InvalidReduction& e) {
        throw UsageError(e.what());
    }
    mrs::save_report(report, out_path);
    manifest.output(out_path);
    manifest.write(out_path + ".manifest.json");

    std::cout << "evaluated " << report.count << " spectra: epsilon " << report.epsilon
              << " sigma " << report.sigma << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MEGA-PRESS metabolite quantification workbench"};
    app.set_version_flag("--version", std::string("mrsquant ") + kVersion);
    app.require_subcommand(1);

    // gen-basis
    auto* gen_basis = app.add_subcommand("gen-basis", "synthesise basis-set archives");
    std::string gb_defs, gb_out = "basis", gb_window, gb_tag = "parametric-v1";
    std::vector<double> gb_linewidths = {1.0};
    gen_basis->add_option("--defs", gb_defs, "metabolite definition file (JSON)");
    gen_basis->add_option("--linewidths", gb_linewidths, "linewidths in Hz")->delimiter(',');
    gen_basis->add_option("--out", gb_out, "output directory");
    gen_basis->add_option("--window", gb_window, "ppm window HIGH,LOW,BINS");
    gen_basis->add_option("--source-tag", gb_tag, "provenance tag stored in the archives");

    // gen-dataset
    auto* gen_dataset = app.add_subcommand("gen-dataset", "generate labelled spectra datasets");
    std::vector<std::string> gd_basis;
    int gd_count = 0;
    uint64_t gd_seed = 0;
    double gd_noisy = 0.5;
    std::string gd_split, gd_out = "data";
    gen_dataset->add_option("--basis", gd_basis, "basis archive files or directories")
        ->required();
    gen_dataset->add_option("--count", gd_count, "total sample count");
    gen_dataset->add_option("--seed", gd_seed, "generation seed");
    gen_dataset->add_option("--noisy-fraction", gd_noisy, "fraction of noisy samples");
    gen_dataset->add_option("--split", gd_split, "archives to emit, e.g. train=5000,val=1000");
    gen_dataset->add_option("--out", gd_out, "output directory");

    // train
    auto* train = app.add_subcommand("train", "train a quantification network");
    std::string tr_train, tr_val, tr_size = "small", tr_reduction = "strided";
    std::string tr_acq = "off,diff", tr_comp = "m", tr_out = "model.mrsnet";
    int tr_batch = 64, tr_epochs = 200;
    double tr_scale = 1.0, tr_lr = 1e-4;
    uint64_t tr_seed = 0;
    train->add_option("--train", tr_train, "training dataset archive")->required();
    train->add_option("--val", tr_val, "validation dataset archive")->required();
    train->add_option("--size", tr_size, "network size: small|medium|large");
    train->add_option("--reduction", tr_reduction, "column reduction: strided|pooling");
    train->add_option("--acquisitions", tr_acq, "input acquisitions, e.g. off,diff");
    train->add_option("--components", tr_comp, "input components, e.g. m or r,i");
    train->add_option("--batch", tr_batch, "minibatch size");
    train->add_option("--epochs", tr_epochs, "maximum epochs");
    train->add_option("--channel-scale", tr_scale, "channel width multiplier in (0,1]");
    train->add_option("--lr", tr_lr, "learning rate");
    train->add_option("--seed", tr_seed, "training seed");
    train->add_option("--out", tr_out, "checkpoint output path");

    // quantify
    auto* quantify = app.add_subcommand("quantify", "predict concentrations for scan files");
    std::string qf_model, qf_format = "report", qf_out;
    std::vector<std::string> qf_spectra;
    double qf_cutoff = 0.25;
    quantify->add_option("--model", qf_model, "trained checkpoint")->required();
    quantify->add_option("--spectra", qf_spectra, "scan container files")->required();
    quantify->add_option("--format", qf_format, "output format: report|tsv");
    quantify->add_option("--out", qf_out, "output file (stdout when omitted)");
    quantify->add_option("--butterworth", qf_cutoff, "low-pass cutoff as a Nyquist fraction");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a model or baseline on a dataset");
    std::string ev_model, ev_baseline, ev_dataset, ev_phantom, ev_reduce;
    std::string ev_sigma = "predictions", ev_acq = "off,diff", ev_comp = "r,i";
    std::string ev_out = "report.json";
    std::vector<std::string> ev_basis;
    bool ev_merge_glx = false;
    double ev_cutoff = 0.25;
    evaluate->add_option("--model", ev_model, "trained checkpoint");
    evaluate->add_option("--baseline", ev_baseline, "baseline quantifier (nnls)");
    evaluate->add_option("--basis", ev_basis, "basis archives for the baseline");
    evaluate->add_option("--dataset", ev_dataset, "labelled dataset archive");
    evaluate->add_option("--phantom-manifest", ev_phantom, "phantom scan manifest (JSON)");
    evaluate->add_option("--reduce", ev_reduce, "metabolites to keep, e.g. NAA,GABA,GLX");
    evaluate->add_flag("--merge-glx", ev_merge_glx, "combine Glu+Gln into GLX");
    evaluate->add_option("--sigma-mode", ev_sigma, "predictions|absolute-errors");
    evaluate->add_option("--acquisitions", ev_acq, "baseline fit acquisitions");
    evaluate->add_option("--components", ev_comp, "baseline fit components");
    evaluate->add_option("--butterworth", ev_cutoff, "phantom low-pass cutoff");
    evaluate->add_option("--out", ev_out, "report output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen_basis->parsed())
            return cmd_gen_basis(gb_defs, gb_linewidths, gb_out, gb_window, gb_tag);
        if (gen_dataset->parsed())
            return cmd_gen_dataset(gd_basis, gd_count, gd_seed, gd_noisy, gd_split, gd_out);
        if (train->parsed())
            return cmd_train(tr_train, tr_val, tr_size, tr_reduction, tr_acq, tr_comp, tr_batch,
                             tr_epochs, tr_scale, tr_lr, tr_seed, tr_out);
        if (quantify->parsed())
            return cmd_quantify(qf_model, qf_spectra, qf_format, qf_out, qf_cutoff);
        if (evaluate->parsed())
            return cmd_evaluate(ev_model, ev_baseline, ev_basis, ev_dataset, ev_phantom,
                                ev_reduce, ev_merge_glx, ev_sigma, ev_acq, ev_comp, ev_cutoff,
                                ev_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mrs::DivergenceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const mrs::ConvergenceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const mrs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
