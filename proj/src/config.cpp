#include "pianovis/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pianovis {

namespace {

void check(bool ok, const std::string &key, const char *constraint) {
    if (!ok)
        throw std::runtime_error("config: value for '" + key + "' violates: " + constraint);
}

} // namespace

PipelineConfig load_config(const std::string &path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno));
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto strip = [](std::string s) {
            size_t b2 = s.find_first_not_of(" \t");
            size_t e2 = s.find_last_not_of(" \t");
            return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
        };
        key = strip(key);
        val = strip(val);

        std::istringstream vs(val);
        auto num = [&]() {
            double d;
            if (!(vs >> d) || !(vs >> std::ws).eof())
                throw std::runtime_error("config: non-numeric value for '" + key + "'");
            return d;
        };

        if (key == "fps") {
            cfg.fps = num();
            check(cfg.fps > 0, key, "> 0");
        } else if (key == "layout.first_midi") {
            cfg.layout.first_midi = static_cast<int>(num());
            check(cfg.layout.first_midi >= 0 && cfg.layout.first_midi <= 127, key, "in [0,127]");
        } else if (key == "layout.n_keys") {
            cfg.layout.n_keys = static_cast<int>(num());
            check(cfg.layout.n_keys >= 2, key, ">= 2");
        } else if (key == "hough.rho_step") {
            cfg.hough.rho_step = num();
            check(cfg.hough.rho_step > 0, key, "> 0");
        } else if (key == "hough.theta_step") {
            cfg.hough.theta_step = num();
            check(cfg.hough.theta_step > 0, key, "> 0");
        } else if (key == "hough.threshold") {
            cfg.hough.threshold = static_cast<int>(num());
        } else if (key == "hough.edge_percentile") {
            cfg.hough.edge_percentile = num();
            check(cfg.hough.edge_percentile > 0 && cfg.hough.edge_percentile < 1, key, "in (0,1)");
        } else if (key == "score.dark_cutoff") {
            cfg.score.dark_cutoff = num();
            check(cfg.score.dark_cutoff > 0 && cfg.score.dark_cutoff < 1, key, "in (0,1)");
        } else if (key == "score.bright_cutoff") {
            cfg.score.bright_cutoff = num();
            check(cfg.score.bright_cutoff > 0 && cfg.score.bright_cutoff < 1, key, "in (0,1)");
        } else if (key == "score.min_area_fraction") {
            cfg.score.min_area_fraction = num();
            check(cfg.score.min_area_fraction >= 0 && cfg.score.min_area_fraction < 1, key,
                  "in [0,1)");
        } else if (key == "hand.diff_threshold") {
            cfg.hand.diff_threshold = static_cast<float>(num());
            check(cfg.hand.diff_threshold > 0 && cfg.hand.diff_threshold < 1, key, "in (0,1)");
        } else if (key == "hand.open_radius") {
            cfg.hand.open_radius = static_cast<int>(num());
            check(cfg.hand.open_radius >= 0, key, ">= 0");
        } else if (key == "hand.min_column_mass") {
            cfg.hand.min_column_mass = static_cast<int>(num());
            check(cfg.hand.min_column_mass >= 1, key, ">= 1");
        } else if (key == "flow.window") {
            cfg.flow.flow.window = static_cast<int>(num());
            check(cfg.flow.flow.window >= 3 && cfg.flow.flow.window % 2 == 1, key, "odd, >= 3");
        } else if (key == "flow.iterations") {
            cfg.flow.flow.iterations = static_cast<int>(num());
            check(cfg.flow.flow.iterations >= 1, key, ">= 1");
        } else if (key == "flow.regularization") {
            cfg.flow.flow.regularization = num();
            check(cfg.flow.flow.regularization > 0, key, "> 0");
        } else if (key == "flow.clamp") {
            cfg.flow.clamp = static_cast<float>(num());
            check(cfg.flow.clamp > 0, key, "> 0");
        } else if (key == "train.dropout_rate") {
            cfg.dropout_rate = num();
            check(cfg.dropout_rate >= 0 && cfg.dropout_rate < 1, key, "in [0,1)");
        } else if (key == "train.focal_gamma") {
            cfg.focal_gamma = num();
            check(cfg.focal_gamma >= 0, key, ">= 0");
        } else if (key == "train.ld_sigma") {
            cfg.ld_sigma = num();
            check(cfg.ld_sigma > 0, key, "> 0");
        } else if (key == "train.batch_size") {
            cfg.batch_size = static_cast<int>(num());
            check(cfg.batch_size >= 1, key, ">= 1");
        } else if (key == "transcribe.debounce") {
            double d = num();
            check(d == 0 || d == 1, key, "0 or 1");
            cfg.debounce = d != 0;
        } else {
            throw std::runtime_error("config: unknown key '" + key + "' at line " +
                                     std::to_string(lineno));
        }
    }
    return cfg;
}

void save_config(const PipelineConfig &cfg, const std::string &path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("config: cannot open " + path + " for writing");
    os << "fps=" << cfg.fps << "\n";
    os << "layout.first_midi=" << cfg.layout.first_midi << "\n";
    os << "layout.n_keys=" << cfg.layout.n_keys << "\n";
    os << "hough.rho_step=" << cfg.hough.rho_step << "\n";
    os << "hough.theta_step=" << cfg.hough.theta_step << "\n";
    os << "hough.threshold=" << cfg.hough.threshold << "\n";
    os << "hough.edge_percentile=" << cfg.hough.edge_percentile << "\n";
    os << "score.dark_cutoff=" << cfg.score.dark_cutoff << "\n";
    os << "score.bright_cutoff=" << cfg.score.bright_cutoff << "\n";
    os << "score.min_area_fraction=" << cfg.score.min_area_fraction << "\n";
    os << "hand.diff_threshold=" << cfg.hand.diff_threshold << "\n";
    os << "hand.open_radius=" << cfg.hand.open_radius << "\n";
    os << "hand.min_column_mass=" << cfg.hand.min_column_mass << "\n";
    os << "flow.window=" << cfg.flow.flow.window << "\n";
    os << "flow.iterations=" << cfg.flow.flow.iterations << "\n";
    os << "flow.regularization=" << cfg.flow.flow.regularization << "\n";
    os << "flow.clamp=" << cfg.flow.clamp << "\n";
    os << "train.dropout_rate=" << cfg.dropout_rate << "\n";
    os << "train.focal_gamma=" << cfg.focal_gamma << "\n";
    os << "train.ld_sigma=" << cfg.ld_sigma << "\n";
    os << "train.batch_size=" << cfg.batch_size << "\n";
    os << "transcribe.debounce=" << (cfg.debounce ? 1 : 0) << "\n";
}

} // namespace pianovis
