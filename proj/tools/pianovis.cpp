// pianovis — silent piano-performance video to note events.
//
// Subcommands: detect-keyboard, synth, extract, train, evaluate, transcribe.
// Exit codes: 0 ok, 1 usage error, 2 detection/processing failure.

#include "pianovis/config.hpp"
#include "pianovis/dataset.hpp"
#include "pianovis/models.hpp"
#include "pianovis/synth.hpp"
#include "pianovis/transcribe.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace pianovis;

namespace {

GrayFrame load_background(const std::string &path) {
    if (fs::is_directory(path)) return read_pgm(frame_path(path, 1));
    return read_pgm(path);
}

int count_frames(const std::string &dir) {
    int n = 0;
    while (fs::exists(frame_path(dir, n + 1))) ++n;
    if (n == 0) throw std::runtime_error("no frame_NNNNNN.pgm files under " + dir);
    return n;
}

ModelTask parse_task(const std::string &name) {
    if (name == "onoff") return ModelTask::OnOff;
    if (name == "intensity") return ModelTask::Intensity;
    if (name == "intensity-flow") return ModelTask::IntensityFlow;
    throw CLI::ValidationError("task must be onoff|intensity|intensity-flow");
}

KeyColor parse_color(const std::string &name) {
    if (name == "white") return KeyColor::White;
    if (name == "black") return KeyColor::Black;
    throw CLI::ValidationError("color must be white|black");
}

void print_stats(const DatasetStats &stats) {
    std::cout << "samples: " << stats.total << "\n";
    for (size_t k = 0; k < stats.per_label.size(); ++k)
        std::cout << "  label " << k << ": " << stats.per_label[k] << "\n";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"piano performance analysis from silent overhead video"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value pipeline config file")->expected(1);

    // ---- detect-keyboard ----
    auto *cmd_detect = app.add_subcommand("detect-keyboard", "locate keyboard and segment keys");
    std::string det_background, det_out;
    cmd_detect->add_option("--background", det_background, "background frame (PGM) or frame dir")
        ->required();
    cmd_detect->add_option("--out", det_out, "output layout file")->required();

    // ---- synth ----
    auto *cmd_synth = app.add_subcommand("synth", "render a synthetic performance with ground truth");
    std::string synth_frames, synth_midi, synth_score;
    int synth_notes = 50;
    uint64_t synth_seed = 1;
    cmd_synth->add_option("--out-frames", synth_frames, "output frame directory")->required();
    cmd_synth->add_option("--out-midi", synth_midi, "output ground-truth MIDI file")->required();
    cmd_synth->add_option("--score", synth_score, "MIDI score to render (default: random)");
    cmd_synth->add_option("--notes", synth_notes, "random score length when no --score given");
    cmd_synth->add_option("--seed", synth_seed, "render seed");

    // ---- extract ----
    auto *cmd_extract = app.add_subcommand("extract", "build a labeled dataset from frames + MIDI");
    std::string ex_frames, ex_layout, ex_midi, ex_task = "onoff", ex_color = "white", ex_out;
    cmd_extract->add_option("--frames", ex_frames)->required();
    cmd_extract->add_option("--layout", ex_layout)->required();
    cmd_extract->add_option("--midi", ex_midi)->required();
    cmd_extract->add_option("--task", ex_task, "onoff|intensity|intensity-flow")->required();
    cmd_extract->add_option("--color", ex_color, "white|black")->required();
    cmd_extract->add_option("--out", ex_out)->required();

    // ---- train ----
    auto *cmd_train = app.add_subcommand("train", "train one of the six architectures");
    std::string tr_dataset, tr_task = "onoff", tr_color = "white", tr_out;
    uint64_t tr_seed = 1;
    int tr_epochs = 0;
    cmd_train->add_option("--dataset", tr_dataset)->required();
    cmd_train->add_option("--model", tr_task, "onoff|intensity|intensity-flow")->required();
    cmd_train->add_option("--color", tr_color, "white|black")->required();
    cmd_train->add_option("--out", tr_out, "output weights file")->required();
    cmd_train->add_option("--seed", tr_seed);
    cmd_train->add_option("--epochs", tr_epochs, "override recipe epoch count");

    // ---- evaluate ----
    auto *cmd_eval = app.add_subcommand("evaluate", "accuracy + confusion matrix on a dataset");
    std::string ev_dataset, ev_weights;
    cmd_eval->add_option("--dataset", ev_dataset)->required();
    cmd_eval->add_option("--weights", ev_weights)->required();

    // ---- transcribe ----
    auto *cmd_trans = app.add_subcommand("transcribe", "frames -> MIDI note events");
    std::string ts_frames, ts_layout, ts_out, ts_background;
    std::string ts_ow, ts_ob, ts_iw, ts_ib;
    bool ts_no_debounce = false;
    cmd_trans->add_option("--frames", ts_frames)->required();
    cmd_trans->add_option("--layout", ts_layout)->required();
    cmd_trans->add_option("--weights-onoff-white", ts_ow)->required();
    cmd_trans->add_option("--weights-onoff-black", ts_ob)->required();
    cmd_trans->add_option("--weights-intensity-white", ts_iw)->required();
    cmd_trans->add_option("--weights-intensity-black", ts_ib)->required();
    cmd_trans->add_option("--out", ts_out, "output MIDI file")->required();
    cmd_trans->add_option("--background", ts_background, "background frame (default: first frame)");
    cmd_trans->add_flag("--no-debounce", ts_no_debounce, "flip key state on single frames");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);

        if (*cmd_detect) {
            GrayFrame background = load_background(det_background);
            KeyboardLayout layout;
            try {
                layout = detect_keyboard(background, cfg.layout, cfg.hough, cfg.score);
            } catch (const std::exception &e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
            write_layout(layout, det_out);
            std::cout << "keyboard " << layout.bounds.x0 << "," << layout.bounds.y0 << " - "
                      << layout.bounds.x1 << "," << layout.bounds.y1 << "\n";
            std::cout << "white keys: " << layout.n_white << "\nblack keys: " << layout.n_black
                      << "\n";
            return 0;
        }

        if (*cmd_synth) {
            std::vector<NoteEvent> score;
            if (!synth_score.empty()) {
                score = midi_read(synth_score, cfg.fps);
            } else {
                std::mt19937_64 rng(synth_seed);
                std::uniform_int_distribution<int> vel(1, 127);
                std::uniform_int_distribution<int> dur(8, 20);
                std::uniform_int_distribution<int> gap(4, 12);
                std::uniform_int_distribution<int> note(cfg.layout.first_midi,
                                                        cfg.layout.first_midi + cfg.layout.n_keys - 1);
                int t = 45;
                for (int i = 0; i < synth_notes; ++i) {
                    int d = dur(rng);
                    score.push_back({note(rng), t, t + d, vel(rng)});
                    t += d + gap(rng);
                }
            }
            RenderConfig rc;
            rc.layout = cfg.layout;
            rc.fps = cfg.fps;
            rc.seed = synth_seed;
            SynthPerformance perf(score, rc);
            fs::create_directories(synth_frames);
            perf.write_frames(synth_frames);
            midi_write(perf.events(), synth_midi, cfg.fps);
            std::cout << "frames: " << perf.frame_count() << "\nnotes: " << perf.events().size()
                      << "\n";
            return 0;
        }

        if (*cmd_extract) {
            KeyboardLayout layout = read_layout(ex_layout);
            auto events = midi_read(ex_midi, cfg.fps);
            GrayFrame background = load_background(ex_frames);
            int n_frames = count_frames(ex_frames);
            ModelTask task = parse_task(ex_task);
            KeyColor color = parse_color(ex_color);

            AlignConfig acfg{cfg.fps, cfg.hand, cfg.flow};
            SampleTask stask = task == ModelTask::OnOff ? SampleTask::OnOff : SampleTask::Intensity;
            auto result = align([&](int i) { return read_pgm(frame_path(ex_frames, i + 1)); },
                                n_frames, background, events, layout, stask,
                                task == ModelTask::IntensityFlow, acfg);
            std::erase_if(result.records,
                          [&](const SampleRecord &r) { return r.feature.color != color; });
            if (result.records.empty()) {
                std::cerr << "error: no samples extracted for color " << ex_color << "\n";
                return 2;
            }
            dataset_save(result.records, ex_out);
            print_stats(dataset_stats(result.records));
            if (result.skipped_incomplete > 0)
                std::cout << "skipped (incomplete stack window): " << result.skipped_incomplete
                          << "\n";
            return 0;
        }

        if (*cmd_train) {
            auto records = dataset_load(tr_dataset);
            ModelKind kind{parse_task(tr_task), parse_color(tr_color)};
            int want = model_input_length(kind);
            if (static_cast<int>(records.front().feature.payload.size()) != want) {
                std::cerr << "error: dataset payload length "
                          << records.front().feature.payload.size() << " does not match model "
                          << tr_task << "/" << tr_color << " (expected " << want << ")\n";
                return 2;
            }
            std::vector<std::vector<float>> inputs;
            std::vector<int> labels;
            for (auto &r : records) {
                inputs.push_back(std::move(r.feature.payload));
                labels.push_back(r.label);
            }
            nn::TrainConfig tc = model_recipe(kind);
            tc.seed = tr_seed;
            tc.batch_size = cfg.batch_size;
            tc.focal_gamma = cfg.focal_gamma;
            tc.ld_sigma = cfg.ld_sigma;
            if (tr_epochs > 0) tc.epochs = tr_epochs;
            auto result = nn::train(build_model(kind, cfg.dropout_rate), inputs, labels, tc);
            nn::save_weights(result.weights, tr_out);
            std::ofstream log(tr_out + ".log");
            for (const auto &m : result.metrics) {
                std::cout << "epoch " << m.epoch << " loss " << m.train_loss << " val_accuracy "
                          << m.val_accuracy << "\n";
                log << "epoch " << m.epoch << " loss " << m.train_loss << " val_accuracy "
                    << m.val_accuracy << "\n";
            }
            return 0;
        }

        if (*cmd_eval) {
            auto records = dataset_load(ev_dataset);
            nn::Network net(nn::load_weights(ev_weights));
            int n_classes = 0;
            for (const auto &r : records) n_classes = std::max(n_classes, r.label + 1);
            std::vector<std::vector<size_t>> confusion;
            size_t correct = 0;
            for (const auto &r : records) {
                auto p = nn::predict(net, r.feature.payload);
                n_classes = std::max(n_classes, static_cast<int>(p.size()));
                confusion.resize(n_classes, std::vector<size_t>(n_classes, 0));
                for (auto &row : confusion) row.resize(n_classes, 0);
                int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
                ++confusion[r.label][pred];
                if (pred == r.label) ++correct;
            }
            std::cout << "accuracy " << static_cast<double>(correct) / records.size() << "\n";
            std::cout << "confusion (rows = truth, cols = predicted):\n";
            for (int t = 0; t < n_classes; ++t) {
                for (int p = 0; p < n_classes; ++p) std::cout << confusion[t][p] << (p + 1 < n_classes ? " " : "\n");
            }
            return 0;
        }

        if (*cmd_trans) {
            KeyboardLayout layout = read_layout(ts_layout);
            GrayFrame background =
                ts_background.empty() ? load_background(ts_frames) : read_pgm(ts_background);
            int n_frames = count_frames(ts_frames);
            TranscribeModels models{nn::load_weights(ts_ow), nn::load_weights(ts_ob),
                                    nn::load_weights(ts_iw), nn::load_weights(ts_ib)};
            PipelineConfig tcfg = cfg;
            if (ts_no_debounce) tcfg.debounce = false;
            auto events = transcribe([&](int i) { return read_pgm(frame_path(ts_frames, i + 1)); },
                                     n_frames, background, layout, models, tcfg);
            midi_write(events, ts_out, cfg.fps);
            std::cout << "notes: " << events.size() << "\n";
            return 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
