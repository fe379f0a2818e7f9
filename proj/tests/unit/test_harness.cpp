#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "optlab/harness.hpp"

using namespace optlab;
using namespace optlab::harness;

namespace {

const char* kMinimalConfig = R"({
  "experiment_id": "mini",
  "instance_spec": {"kind": "quadratic", "l": 1.0, "delta": 0.5},
  "optimizer_spec": {"kind": "sgd", "eta": 0.5, "alpha": 0.5},
  "noise_spec": {"kind": "zero", "sigma": 0.0},
  "horizon_T": 10,
  "seeds": [7]
})";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string strip_wall_time(std::string text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("wall_time") == std::string::npos) out << line << '\n';
    return out.str();
}

std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("optlab_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("config round-trips through parse and serialize") {
    auto spec = parse_config(kMinimalConfig);
    auto again = parse_config(serialize_config(spec));
    CHECK(again.experiment_id == spec.experiment_id);
    CHECK(again.instance_spec.kind == spec.instance_spec.kind);
    CHECK(again.instance_spec.fields == spec.instance_spec.fields);
    CHECK(again.optimizer_spec.fields == spec.optimizer_spec.fields);
    CHECK(again.noise_spec.kind == spec.noise_spec.kind);
    CHECK(again.horizon_T == spec.horizon_T);
    CHECK(again.seeds == spec.seeds);
    CHECK(again.metrics == spec.metrics);
    CHECK(serialize_config(again) == serialize_config(spec));
}

TEST_CASE("config errors carry JSON pointers") {
    auto expect_pointer = [](const std::string& text, const std::string& ptr) {
        try {
            parse_config(text);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.pointer == ptr);
        }
    };
    expect_pointer(R"({
      "experiment_id": "x",
      "instance_spec": {"kind": "quadratic", "l": 1.0, "delta": 0.5},
      "optimizer_spec": {"kind": "sgd", "eta": 0.5},
      "noise_spec": {"kind": "gaussian", "sigma": -1.0},
      "horizon_T": 10, "seeds": [1]
    })",
                   "/noise_spec/sigma");
    expect_pointer(R"({
      "experiment_id": "x",
      "instance_spec": {"kind": "sgd_hard", "l": 1.0, "delta": 0.5, "eta": 4.0},
      "optimizer_spec": {"kind": "sgd", "eta": 4.0},
      "noise_spec": {"kind": "zero"},
      "horizon_T": 10, "seeds": [1]
    })",
                   "/instance_spec");
    expect_pointer(R"({
      "experiment_id": "x",
      "instance_spec": {"kind": "quadratic", "l": 1.0, "delta": 0.5, "bogus": 1},
      "optimizer_spec": {"kind": "sgd", "eta": 0.5},
      "noise_spec": {"kind": "zero"},
      "horizon_T": 10, "seeds": [1]
    })",
                   "/instance_spec/bogus");
    expect_pointer(R"({
      "experiment_id": "x",
      "instance_spec": {"kind": "quadratic", "l": 1.0, "delta": 0.5},
      "optimizer_spec": {"kind": "sgd", "eta": 0.5},
      "noise_spec": {"kind": "zero"},
      "horizon_T": 10, "seeds": [1, 1]
    })",
                   "/seeds/1");
}

TEST_CASE("sgd_hard config error cites the hypothesis") {
    try {
        parse_config(R"({
          "experiment_id": "x",
          "instance_spec": {"kind": "sgd_hard", "l": 1.0, "delta": 0.5, "eta": 4.0},
          "optimizer_spec": {"kind": "sgd", "eta": 4.0},
          "noise_spec": {"kind": "zero"},
          "horizon_T": 10, "seeds": [1]
        })");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("eta*l >= 5") != std::string::npos);
    }
}

TEST_CASE("single-seed zero-noise aggregates equal the trajectory") {
    auto spec = parse_config(kMinimalConfig);
    auto result = run_experiment(spec, 1);
    REQUIRE(result.per_seed.size() == 1);
    const auto& rows = result.aggregates.at("grad_norm");
    REQUIRE(rows.size() == 10);
    for (std::size_t t = 0; t < 10; ++t) {
        CHECK(rows[t].mean == result.per_seed[0].grad_norm[t]);
        CHECK(rows[t].stderr_ == 0.0);
    }
}

TEST_CASE("summary JSON is byte-identical across runs and worker counts") {
    ExperimentSpec spec = parse_config(kMinimalConfig);
    spec.seeds = {3, 1, 4, 1501, 9, 2, 6};
    spec.noise_spec = {"gaussian", 1.0, std::nullopt};
    spec.horizon_T = 200;
    spec.bounds_to_overlay = {"sgd_upper_bound"};

    auto d1 = temp_dir("det1"), d2 = temp_dir("det2"), d8 = temp_dir("det8");
    emit_all(run_config(spec, 1), d1.string());
    emit_all(run_config(spec, 1), d2.string());
    emit_all(run_config(spec, 8), d8.string());
    CHECK(slurp(d1 / "mini.csv") == slurp(d2 / "mini.csv"));
    CHECK(slurp(d1 / "mini.csv") == slurp(d8 / "mini.csv"));
    CHECK(slurp(d1 / "mini.aggregate.csv") == slurp(d8 / "mini.aggregate.csv"));
    CHECK(strip_wall_time(slurp(d1 / "summary.json")) ==
          strip_wall_time(slurp(d2 / "summary.json")));
    CHECK(strip_wall_time(slurp(d1 / "summary.json")) ==
          strip_wall_time(slurp(d8 / "summary.json")));
}

TEST_CASE("csv layout and lossless round-trip") {
    ExperimentSpec spec = parse_config(kMinimalConfig);
    spec.horizon_T = 2;
    spec.noise_spec = {"gaussian", 0.3333333333333333, std::nullopt};
    auto result = run_experiment(spec, 1);
    auto dir = temp_dir("csv");
    emit_csv(result, (dir / "out.csv").string());

    std::ifstream f(dir / "out.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "experiment_id,seed,t,f_value,grad_norm,stoch_grad_norm,effective_stepsize,x1");
    std::string line;
    int rows = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ++rows;
        // parse back the f_value column and compare bitwise
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < 4; ++i) std::getline(ss, cell, ',');
        const double parsed = std::strtod(cell.c_str(), nullptr);
        CHECK(parsed == result.per_seed[0].f_value[rows - 1]);
    }
    CHECK(rows == 2);
    CHECK(std::filesystem::exists(dir / "out.aggregate.csv"));
}

TEST_CASE("blow-up runs truncate the csv at the failing step") {
    ExperimentSpec spec = parse_config(kMinimalConfig);
    spec.instance_spec.fields["l"] = 80.0;
    spec.instance_spec.fields["delta"] = 2.0;
    spec.optimizer_spec.fields["eta"] = 1.0;
    spec.horizon_T = 2000;
    auto result = run_experiment(spec, 1);
    REQUIRE(result.per_seed[0].overflow_at.has_value());
    const auto len = result.per_seed[0].length();
    CHECK(len < 2000);
    CHECK(std::isfinite(result.per_seed[0].grad_norm[len - 1]));
    auto dir = temp_dir("blowup");
    emit_csv(result, (dir / "b.csv").string());
    std::ifstream f(dir / "b.csv");
    std::string line;
    int rows = -1;  // header
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(len));
}

TEST_CASE("per-seed rows are withheld above the retention cap") {
    ExperimentSpec spec = parse_config(kMinimalConfig);
    spec.noise_spec = {"gaussian", 1.0, std::nullopt};
    spec.seeds.clear();
    for (std::uint64_t s = 1; s <= 33; ++s) spec.seeds.push_back(s);
    auto result = run_experiment(spec, 2);
    CHECK_FALSE(result.retain_per_seed);
    auto dir = temp_dir("cap");
    emit_csv(result, (dir / "c.csv").string());
    std::ifstream f(dir / "c.csv");
    std::string line;
    int lines = 0;
    while (std::getline(f, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 1);  // header only
    CHECK(result.aggregates.at("grad_norm").size() == 10);
}

TEST_CASE("catalog contract") {
    const auto& cat = list_reproductions();
    CHECK(cat.size() >= 10);
    for (const char* name :
         {"fig1a-quadratic", "thm32-blowup", "nsgd-noncvg", "amsgrad-frechet",
          "amsgrad-oscillator", "momentum-lb", "bound-sweep", "amsgrad-det-rate", "adagrad-rate",
          "nsgdm-rate"}) {
        const auto& r = reproduction_by_name(name);
        CHECK(!r.specs.empty());
        for (const auto& s : r.specs) {
            // every catalog spec round-trips through the strict parser
            auto reparsed = parse_config(serialize_config(s));
            CHECK(reparsed.experiment_id == s.experiment_id);
        }
    }
    const auto& fig = reproduction_by_name("fig1a-quadratic");
    CHECK(fig.specs.size() == 6);
    bool has_l30 = false;
    for (const auto& s : fig.specs) {
        const auto& f = s.optimizer_spec.fields;
        const double rate = f.count("eta") ? f.at("eta") : f.at("gamma");
        CHECK(rate == 1.0);
        if (s.instance_spec.fields.at("l") == 30.0) has_l30 = true;
    }
    CHECK(has_l30);
    const auto& noncvg = reproduction_by_name("nsgd-noncvg");
    CHECK(noncvg.specs[0].optimizer_spec.fields.at("gamma") == 1.0);
    CHECK(noncvg.specs[0].optimizer_spec.fields.at("alpha") == 0.5);
    CHECK_THROWS_AS(reproduction_by_name("nope"), IndexError);
}

TEST_CASE("thm32 summary carries per-phase verdicts, rate fits carry windows") {
    auto res = run_reproduction(reproduction_by_name("thm32-blowup"), 1);
    CHECK(res.verdicts.count("growth_phase_curve"));
    CHECK(res.verdicts.count("plateau_floor"));
    auto dir = temp_dir("thm32");
    emit_all(res, dir.string());
    auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j.contains("verdicts"));
    CHECK(j["verdicts"].contains("growth_t0_display"));
    CHECK(j["experiments"][0]["rate_fits"]["grad_norm"].contains("fit_window"));
    CHECK(j.contains("versions"));
    CHECK(j.contains("wall_time"));
    // per-t curve bound appears as a column in the aggregate csv
    std::ifstream f(dir / "thm32-blowup.aggregate.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header.find("bound_sgd_lower_curve") != std::string::npos);
}

TEST_CASE("bound grid keys are parameter-labelled") {
    ExperimentSpec spec = parse_config(kMinimalConfig);
    spec.noise_spec = {"gaussian", 1.0, std::nullopt};
    spec.seeds = {1, 2, 3};
    spec.horizon_T = 50;
    spec.bounds_to_overlay = {"sgd_upper_bound"};
    auto dir = temp_dir("grid");
    auto res = run_config(spec, 1);
    emit_all(res, dir.string());
    auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j["bound_values"]["sgd_upper_bound"].contains("eta=0.5,l=1"));
    // config runs grow a dominance verdict per comparable overlay
    REQUIRE(res.verdicts.count("dominance_sgd_upper_bound"));
    CHECK(res.verdicts.at("dominance_sgd_upper_bound").status == "pass");
}

TEST_CASE("certify_instance validates every catalog instance kind") {
    for (const char* cfg : {
             R"({"experiment_id":"a","instance_spec":{"kind":"quadratic","l":1.0,"delta":0.5},
                "optimizer_spec":{"kind":"sgd","eta":0.5},"noise_spec":{"kind":"zero"},
                "horizon_T":5,"seeds":[1]})",
             R"({"experiment_id":"b","instance_spec":{"kind":"amsgrad_oscillator","v0":1.0,
                "gamma":2.0,"l":1.0,"delta":1.0},
                "optimizer_spec":{"kind":"amsgrad","gamma":2.0,"alpha":0.0,"v0":1.0},
                "noise_spec":{"kind":"zero"},"horizon_T":5,"seeds":[1]})",
         }) {
        auto built = build_experiment(parse_config(cfg));
        auto rep = certify_instance(built.instance, 2000);
        CHECK(rep.pass);
    }
}
