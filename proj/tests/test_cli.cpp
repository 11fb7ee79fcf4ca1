// End-to-end exercise of the mrsquant binary: basis generation, dataset
// generation (reproducible bytes), a tiny training run, quantification of
// scan containers and both evaluation paths. Plain asserts; the binary path
// comes in as argv[1].

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrs/basis.hpp"
#include "mrs/datagen.hpp"
#include "mrs/eval.hpp"
#include "mrs/scanfile.hpp"
#include "mrs/util.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (ok) {
        std::cout << "ok: " << what << "\n";
    } else {
        std::cout << "FAIL: " << what << "\n";
        ++failures;
    }
}

int run(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli <mrsquant binary>\n";
        return 2;
    }
    const std::string bin = argv[1];
    const fs::path work = fs::temp_directory_path() / "mrsquant_cli_test";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string W = work.string();

    // --- gen-basis -------------------------------------------------------------
    check(run(bin + " gen-basis --linewidths 0.75,1.0,1.25 --out " + W + "/basis") == 0,
          "gen-basis with three linewidths succeeds");
    {
        size_t archives = 0;
        for (const auto& e : fs::directory_iterator(W + "/basis"))
            if (e.path().extension() == ".mrsbasis") ++archives;
        check(archives == 3, "three basis archives written");
        check(fs::exists(W + "/basis/gen-basis.manifest.json"), "gen-basis manifest written");
    }

    // bad definitions file -> usage/data error with a named field
    {
        std::ofstream bad(work / "bad.json");
        bad << R"({"metabolites":[{"name":"X","lines":[{"ppm":99,"amplitude":1,"on_sign":1,"off_sign":1}]}]})";
        bad.close();
        check(run(bin + " gen-basis --defs " + W + "/bad.json --out " + W + "/bad 2>" + W +
                  "/bad.err") == 2,
              "bad definitions exit with a data error");
        const std::string err = slurp(work / "bad.err");
        check(err.find("ppm") != std::string::npos, "parse error names the ppm field");
    }

    // --- gen-dataset ------------------------------------------------------------
    const std::string gen = bin + " gen-dataset --basis " + W + "/basis --seed 11" +
                            " --noisy-fraction 0.5 --split train=24,val=8 --out ";
    check(run(gen + W + "/data") == 0, "gen-dataset succeeds");
    check(fs::exists(W + "/data/train.mrsdata") && fs::exists(W + "/data/val.mrsdata"),
          "dataset split archives written");
    check(run(gen + W + "/data2") == 0, "gen-dataset reruns");
    check(slurp(W + "/data/train.mrsdata") == slurp(W + "/data2/train.mrsdata"),
          "same seed reproduces identical dataset bytes");

    {
        const mrs::Dataset train = mrs::load_dataset(W + "/data/train.mrsdata");
        size_t noisy = 0;
        for (const auto& s : train.samples)
            if (s.noise_sigma > 0) ++noisy;
        check(noisy == 12, "half the training samples are noisy");
    }

    // zero noise flag
    check(run(bin + " gen-dataset --basis " + W + "/basis --seed 3 --noisy-fraction 0" +
              " --split train=6 --out " + W + "/clean") == 0,
          "gen-dataset with --noisy-fraction 0");
    {
        const mrs::Dataset clean = mrs::load_dataset(W + "/clean/train.mrsdata");
        bool all_clean = true;
        for (const auto& s : clean.samples) all_clean = all_clean && s.noise_sigma == 0.0;
        check(all_clean, "noisy-fraction 0 leaves every sample clean");
    }

    // usage errors
    check(run(bin + " gen-dataset --basis " + W + "/basis --count 10 --split train=5 --out " +
              W + "/x 2>/dev/null") == 1,
          "split/count mismatch is a usage error");

    // --- train --------------------------------------------------------------------
    const std::string model = W + "/model.mrsnet";
    check(run(bin + " train --train " + W + "/data/train.mrsdata --val " + W +
              "/data/val.mrsdata --size small --reduction strided --acquisitions off,diff" +
              " --components m --batch 8 --epochs 2 --channel-scale 0.0078125 --seed 5 --out " +
              model) == 0,
          "tiny training run succeeds");
    check(fs::exists(model), "checkpoint written");
    check(fs::exists(model + ".manifest.json"), "train manifest written");
    {
        std::ifstream hist(model + ".history.tsv");
        std::string line;
        int lines = 0;
        while (std::getline(hist, line)) ++lines;
        check(lines == 3, "history has a header and one record per epoch");
    }
    check(run(bin + " train --train " + W + "/data/train.mrsdata --val " + W +
              "/data/val.mrsdata --components q --out " + W + "/junk.mrsnet 2>/dev/null") == 1,
          "mismatched components string is a usage error");

    // --- quantify -------------------------------------------------------------------
    // scan containers from raw time-domain mixtures of the bundled models
    {
        const auto models = mrs::default_models();
        mrs::SynthesisInfo info;
        mrs::Scan scan;
        for (mrs::AcquisitionKind k :
             {mrs::AcquisitionKind::EditOff, mrs::AcquisitionKind::EditOn}) {
            mrs::TimeSignal total;
            total.bandwidth_hz = info.bandwidth_hz;
            total.samples.assign(size_t(info.time_samples), mrs::cplx(0.0, 0.0));
            double weight = 0.25;
            for (const auto& m : models) {
                const mrs::TimeSignal part = mrs::synthesize_time_signal(m, k, 1.0, info);
                for (size_t i = 0; i < part.samples.size(); ++i)
                    total.samples[i] += weight * part.samples[i];
                weight += 0.1;
            }
            scan.acquisitions[size_t(k)] = std::move(total);
        }
        mrs::save_scan(scan, W + "/scan1.mrsscan");
        mrs::save_scan(scan, W + "/scan2.mrsscan");
    }
    check(run(bin + " quantify --model " + model + " --spectra " + W + "/scan1.mrsscan " + W +
              "/scan2.mrsscan --format tsv --out " + W + "/pred.tsv") == 0,
          "quantify succeeds on scan containers");
    {
        std::ifstream tsv(W + "/pred.tsv");
        std::string header;
        std::getline(tsv, header);
        check(header.find("NAA") != std::string::npos, "tsv header carries metabolite names");
        std::string row;
        std::getline(tsv, row);
        std::istringstream ss(row);
        std::string file;
        ss >> file;
        double total = 0.0, v = 0.0;
        while (ss >> v) total += v;
        check(std::abs(total - 1.0) < 1e-6, "quantified concentrations sum to 1");
    }
    check(run(bin + " quantify --model " + model + " --spectra " + W +
              "/missing.mrsscan --out " + W + "/none.tsv 2>/dev/null") == 2,
          "missing scan file exits with a data error");

    // --- evaluate -------------------------------------------------------------------
    check(run(bin + " evaluate --model " + model + " --dataset " + W +
              "/data/val.mrsdata --out " + W + "/net_report.json") == 0,
          "network evaluation succeeds");
    check(run(bin + " evaluate --baseline nnls --basis " + W +
              "/basis/parametric-v1-1hz.mrsbasis --dataset " + W + "/data/val.mrsdata" +
              " --acquisitions off,diff --components r,i --out " + W + "/nnls_report.json") == 0,
          "nnls evaluation succeeds");
    {
        const auto a = mrs::load_report(W + "/net_report.json");
        const auto b = mrs::load_report(W + "/nnls_report.json");
        check(a.count == b.count, "both reports cover the same records");
        check(b.epsilon < a.epsilon + 1.0, "reports carry comparable epsilon fields");
    }
    check(run(bin + " evaluate --model " + model + " --dataset " + W +
              "/data/val.mrsdata --reduce NAA,GABA --merge-glx --out " + W +
              "/reduced.json") == 0,
          "reduced evaluation succeeds");
    {
        const auto r = mrs::load_report(W + "/reduced.json");
        check(r.labels == std::vector<std::string>{"NAA", "GABA"},
              "reduced report keeps the requested set");
    }

    // phantom manifest path
    {
        nlohmann::json manifest;
        manifest["scans"] = nlohmann::json::array();
        manifest["scans"].push_back(
            {{"path", "scan1.mrsscan"},
             {"concentrations",
              {{"NAA", 15.0}, {"Cr", 8.0}, {"Glu", 12.0}, {"Gln", 3.0}, {"GABA", 2.0}}}});
        manifest["scans"].push_back(
            {{"path", "scan2.mrsscan"},
             {"concentrations",
              {{"NAA", 15.0}, {"Cr", 8.0}, {"Glu", 12.0}, {"Gln", 3.0}, {"GABA", 4.0}}}});
        std::ofstream out(W + "/phantom.json");
        out << manifest.dump(2);
    }
    check(run(bin + " evaluate --model " + model + " --phantom-manifest " + W +
              "/phantom.json --out " + W + "/phantom_report.json") == 0,
          "phantom evaluation succeeds");
    check(run(bin + " evaluate --model " + model + " --baseline nnls --dataset " + W +
              "/data/val.mrsdata --out " + W + "/bad.json 2>/dev/null") == 1,
          "model and baseline together is a usage error");

    fs::remove_all(work);
    std::cout << (failures == 0 ? "ALL CLI CHECKS PASSED\n" : "CLI CHECKS FAILED\n");
    return failures == 0 ? 0 : 1;
}
