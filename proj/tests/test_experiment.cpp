#include "catch_amalgamated.hpp"

#include "gmtlab/experiment.hpp"
#include "gmtlab/svgplot.hpp"

using namespace gmtlab;

namespace {

std::string strip_wall_ms(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const size_t last = line.rfind(',');
        out << (last == std::string::npos ? line : line.substr(0, last)) << '\n';
    }
    return out.str();
}

} // namespace

TEST_CASE("config parsing") {
    const std::string text =
        "# a comment\n"
        "experiment = exponent_sweep\n"
        "map = builtin:paraboloid\n"
        "m = 1\n"
        "k = 1\n"
        "alpha = 1\n"
        "q_grid = 0.5, 1.0   # inline comment\n"
        "depths = 4, 6\n"
        "seed = 42\n";
    ExperimentConfig c = parse_config(text);
    CHECK(c.experiment == "exponent_sweep");
    CHECK(c.map_text == "builtin:paraboloid");
    CHECK(c.q_grid == std::vector<double>{0.5, 1.0});
    CHECK(c.depths == std::vector<int>{4, 6});
    CHECK(c.seed == 42);
    validate_config(c);

    CHECK_THROWS_AS(parse_config("experiment exponent_sweep\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("m = abc\n"), ConfigError);

    ExperimentConfig no_seed = parse_config("experiment = exponent_sweep\nmap = builtin:paraboloid\n"
                                            "q_grid = 1\ndepths = 4\n");
    CHECK_THROWS_AS(validate_config(no_seed), ConfigError);

    ExperimentConfig bad_kind = c;
    bad_kind.experiment = "nope";
    CHECK_THROWS_AS(validate_config(bad_kind), ConfigError);

    ExperimentConfig bad_map = c;
    bad_map.map_text = "builtin:unknown";
    CHECK_THROWS_AS(validate_config(bad_map), std::exception);
}

TEST_CASE("csv round trip validates the predicted column") {
    ExperimentConfig c;
    c.experiment = "exponent_sweep";
    c.map_text = "builtin:paraboloid";
    c.m = 1;
    c.k = 1;
    c.alpha = 1.0;
    c.q_grid = {1.0};
    c.depths = {4, 6};
    c.seed = 21;
    c.seed_set = true;
    RunResult rr = run_experiment(c, 1);
    REQUIRE(!rr.records.empty());
    const std::string csv = records_to_csv(rr.records);
    auto back = parse_csv(csv);
    CHECK(back.size() == rr.records.size());
    CHECK(back.front().measured == rr.records.front().measured);

    // tampering with the predicted column must be caught
    std::string bad = csv;
    const size_t pos = bad.rfind(",1,");  // predicted field of some row
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 3, ",7,");
    CHECK_THROWS(parse_csv(bad));

    CHECK_THROWS(parse_csv("not,a,header\n"));
}

TEST_CASE("determinism: identical csv at jobs 1 and jobs 8") {
    std::vector<ExperimentConfig> configs;
    {
        ExperimentConfig c;
        c.experiment = "exponent_sweep";
        c.map_text = "builtin:paraboloid";
        c.m = 1;
        c.k = 1;
        c.alpha = 1.0;
        c.q_grid = {0.5, 1.0, 1.5};
        c.depths = {4, 5, 6};
        c.seed = 7;
        c.seed_set = true;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = "cube_scaling";
        c.map_text = "builtin:conformal_square";
        c.m = 2;
        c.k = 1;
        c.alpha = 1.0;
        c.q_grid = {1.5};
        c.depths = {5};
        c.sides = {0.5, 0.25, 0.125};
        c.seed = 8;
        c.seed_set = true;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = "choquet";
        c.regime = "adams";
        c.p = 1.5;
        c.s = 3.0;
        c.beta = 0.5;
        c.count = 6;
        c.resolutions = {17};
        c.seed = 9;
        c.seed_set = true;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = "yomdin_fit";
        c.map_text = "(0.25*x0^2, x1)";
        c.raw["n"] = "2";
        c.m = 2;
        c.resolutions = {129};
        c.sides = {1.0, 0.5};
        c.eps_min_log2 = 1;
        c.eps_max_log2 = 5;
        c.seed = 10;
        c.seed_set = true;
        configs.push_back(c);
    }
    for (const auto& c : configs) {
        const std::string a = strip_wall_ms(records_to_csv(run_experiment(c, 1).records));
        const std::string b = strip_wall_ms(records_to_csv(run_experiment(c, 8).records));
        const std::string a2 = strip_wall_ms(records_to_csv(run_experiment(c, 1).records));
        INFO("experiment " << c.experiment);
        CHECK(a == b);
        CHECK(a == a2);
    }
}

TEST_CASE("runner checks fire on failing setups") {
    // a map with no critical structure at all still passes vacuously
    ExperimentConfig c;
    c.experiment = "exponent_sweep";
    c.map_text = "builtin:linear_rank(2,2,2)";  // full rank: empty critical set
    c.m = 2;
    c.k = 1;
    c.alpha = 1.0;
    c.q_grid = {1.5};
    c.depths = {3, 4};
    c.seed = 4;
    c.seed_set = true;
    RunResult rr = run_experiment(c, 1);
    CHECK(rr.checks_passed);
    bool empty_note = false;
    for (const auto& n : rr.notes) empty_note = empty_note || n.find("empty") != std::string::npos;
    CHECK(empty_note);
}

TEST_CASE("svg plots render from records") {
    ExperimentConfig c;
    c.experiment = "cube_scaling";
    c.map_text = "builtin:paraboloid";
    c.m = 1;
    c.k = 1;
    c.alpha = 1.0;
    c.q_grid = {1.0};
    c.depths = {6};
    c.sides = {0.5, 0.25, 0.125};
    c.seed = 12;
    c.seed_set = true;
    RunResult rr = run_experiment(c, 1);
    const std::string svg = render_plot(rr.records, PlotKind::Scaling);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("slope") != std::string::npos);
    CHECK(svg.rfind("</svg>\n") == svg.size() - 7);

    ExperimentConfig sweep;
    sweep.experiment = "exponent_sweep";
    sweep.map_text = "builtin:paraboloid";
    sweep.m = 1;
    sweep.k = 1;
    sweep.alpha = 1.0;
    sweep.q_grid = {0.5, 1.0};
    sweep.depths = {4, 5, 6};
    sweep.seed = 13;
    sweep.seed_set = true;
    const auto sweep_records = run_experiment(sweep, 1).records;
    CHECK(render_plot(sweep_records, PlotKind::Tradeoff).find("reference") != std::string::npos);

    CHECK_THROWS_AS(render_plot({}, PlotKind::Scaling), std::invalid_argument);
    CHECK_THROWS_AS(plot_kind_from_string("bogus"), std::invalid_argument);
}
