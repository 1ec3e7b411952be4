#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pianovis/config.hpp"

#include <filesystem>
#include <fstream>

using namespace pianovis;

namespace {

std::string write_cfg(const std::string &name, const std::string &body) {
    auto dir = std::filesystem::temp_directory_path() / "pianovis_config_test";
    std::filesystem::create_directories(dir);
    auto p = (dir / name).string();
    std::ofstream os(p);
    os << body;
    return p;
}

} // namespace

TEST_CASE("defaults load from an empty file") {
    auto cfg = load_config(write_cfg("empty.cfg", "# nothing here\n\n"));
    CHECK(cfg.fps == 30.0);
    CHECK(cfg.layout.first_midi == 60);
    CHECK(cfg.layout.n_keys == 24);
    CHECK(cfg.batch_size == 64);
}

TEST_CASE("values parse and comments are ignored") {
    auto cfg = load_config(write_cfg("vals.cfg", R"(# pipeline tuning
fps = 60
layout.first_midi = 21
layout.n_keys = 88
hough.threshold = 55
score.dark_cutoff = 0.25
hand.diff_threshold = 0.1   # trailing comment
flow.window = 9
train.dropout_rate = 0.5
transcribe.debounce = 0
)"));
    CHECK(cfg.fps == 60.0);
    CHECK(cfg.layout.first_midi == 21);
    CHECK(cfg.layout.n_keys == 88);
    CHECK(cfg.hough.threshold == 55);
    CHECK(cfg.score.dark_cutoff == 0.25);
    CHECK(cfg.hand.diff_threshold == doctest::Approx(0.1f));
    CHECK(cfg.flow.flow.window == 9);
    CHECK(cfg.dropout_rate == 0.5);
    CHECK_FALSE(cfg.debounce);
}

TEST_CASE("unknown keys rejected") {
    CHECK_THROWS_WITH_AS(load_config(write_cfg("unk.cfg", "frobnicate = 1\n")),
                         doctest::Contains("frobnicate"), std::runtime_error);
}

TEST_CASE("range checks name the violated constraint") {
    CHECK_THROWS(load_config(write_cfg("bad1.cfg", "fps = 0\n")));
    CHECK_THROWS(load_config(write_cfg("bad2.cfg", "fps = -30\n")));
    CHECK_THROWS(load_config(write_cfg("bad3.cfg", "layout.n_keys = 1\n")));
    CHECK_THROWS(load_config(write_cfg("bad4.cfg", "score.dark_cutoff = 1.5\n")));
    CHECK_THROWS(load_config(write_cfg("bad5.cfg", "flow.window = 4\n"))); // must be odd
    CHECK_THROWS(load_config(write_cfg("bad6.cfg", "train.dropout_rate = 1\n")));
    CHECK_THROWS(load_config(write_cfg("bad7.cfg", "train.batch_size = 0\n")));
    CHECK_THROWS(load_config(write_cfg("bad8.cfg", "hand.open_radius = -1\n")));
    CHECK_THROWS(load_config(write_cfg("bad9.cfg", "fps = banana\n")));
}

TEST_CASE("save -> load round-trips every field") {
    PipelineConfig cfg;
    cfg.fps = 24.0;
    cfg.layout = {21, 88};
    cfg.hough.threshold = 33;
    cfg.hough.edge_percentile = 0.9;
    cfg.score.bright_cutoff = 0.55;
    cfg.hand.min_column_mass = 5;
    cfg.flow.clamp = 3.0f;
    cfg.flow.flow.iterations = 4;
    cfg.dropout_rate = 0.1;
    cfg.focal_gamma = 1.5;
    cfg.ld_sigma = 0.8;
    cfg.batch_size = 32;
    cfg.debounce = false;
    auto dir = std::filesystem::temp_directory_path() / "pianovis_config_test";
    std::filesystem::create_directories(dir);
    auto p = (dir / "round.cfg").string();
    save_config(cfg, p);
    auto back = load_config(p);
    CHECK(back.fps == cfg.fps);
    CHECK(back.layout.first_midi == cfg.layout.first_midi);
    CHECK(back.layout.n_keys == cfg.layout.n_keys);
    CHECK(back.hough.threshold == cfg.hough.threshold);
    CHECK(back.hough.edge_percentile == cfg.hough.edge_percentile);
    CHECK(back.score.bright_cutoff == cfg.score.bright_cutoff);
    CHECK(back.hand.min_column_mass == cfg.hand.min_column_mass);
    CHECK(back.flow.clamp == cfg.flow.clamp);
    CHECK(back.flow.flow.iterations == cfg.flow.flow.iterations);
    CHECK(back.dropout_rate == cfg.dropout_rate);
    CHECK(back.focal_gamma == cfg.focal_gamma);
    CHECK(back.ld_sigma == cfg.ld_sigma);
    CHECK(back.batch_size == cfg.batch_size);
    CHECK(back.debounce == cfg.debounce);
}

TEST_CASE("missing file is an error") { CHECK_THROWS(load_config("/nonexistent/path.cfg")); }
