// Command-line surface for the null-space toolkit: train a classifier,
// extract and inspect its null space, compose steganographic images, and
// analyze convolution null spaces. Every command writes a run manifest into
// the output directory before producing outputs, emits a JSON report, and is
// deterministic under a fixed seed.
//
// Exit codes: 0 ok, 1 verification failure, 2 usage or IO error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "nullnet/nullnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nullnet;

namespace {

std::vector<std::size_t> parse_widths(const std::string& spec) {
    std::vector<std::size_t> widths;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t next = spec.find(',', pos);
        if (next == std::string::npos) next = spec.size();
        widths.push_back(std::stoul(spec.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (widths.size() < 3) throw std::runtime_error("--widths needs at least three entries");
    return widths;
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& spec, const char* flag) {
    const std::size_t x = spec.find('x');
    if (x == std::string::npos)
        throw std::runtime_error(std::string(flag) + " expects the form <rows>x<cols>");
    return {std::stoul(spec.substr(0, x)), std::stoul(spec.substr(x + 1))};
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
}

// The manifest goes to disk before any output so a run can be reproduced
// from the output directory alone.
void write_manifest(const json& config, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_json(config, out_dir + "/run_manifest.json");
}

LabeledDataset load_train_split(const std::string& data_dir) {
    return load_labeled_dataset(data_dir + "/train-images-idx3-ubyte",
                                data_dir + "/train-labels-idx1-ubyte");
}

json prediction_json(const Prediction& p) {
    return json{{"class", p.cls}, {"confidence", p.confidence}, {"distribution", p.distribution}};
}

void write_display_image(const Vector& v, std::size_t h, std::size_t w, const std::string& path) {
    const double scale = display_scale(v);
    Vector display(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        display[i] = std::clamp(v[i] * scale, -1.0, 1.0);
    encode_image(display, h, w, path);
}

int cmd_train(const std::string& data_dir, const std::string& out_dir, std::string model_path,
              const std::string& widths_spec, double alpha1, std::size_t epochs, double lr,
              std::uint64_t seed) {
    if (model_path.empty()) model_path = out_dir + "/model.nspec";
    write_manifest(json{{"command", "train"},
                        {"data_dir", data_dir},
                        {"out", out_dir},
                        {"model", model_path},
                        {"widths", widths_spec},
                        {"alpha1", alpha1},
                        {"epochs", epochs},
                        {"lr", lr},
                        {"batch_size", 64},
                        {"seed", seed}},
                   out_dir);

    const LabeledDataset data = load_train_split(data_dir);
    const std::vector<std::size_t> widths = parse_widths(widths_spec);

    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 64;
    cfg.learning_rate = lr;
    cfg.seed = seed;
    cfg.rescale_alpha = alpha1;
    const Network f = train(data, widths, cfg, [](std::size_t epoch, double loss) {
        std::cerr << "epoch " << epoch + 1 << ": mean loss " << loss << "\n";
    });
    save_network(f, model_path);

    const EvalStats original = evaluate(f, data);
    LabeledDataset rescaled_only;
    rescaled_only.height = data.height;
    rescaled_only.width = data.width;
    for (std::size_t i = 0; i < data.size(); ++i) {
        rescaled_only.images.push_back(scaled(data.images[i], alpha1));
        rescaled_only.labels.push_back(data.labels[i]);
    }
    rescaled_only.rescaled.assign(data.size(), 1);
    const EvalStats rescaled = evaluate(f, rescaled_only);

    json report{{"command", "train"},
                {"model", model_path},
                {"train_images", data.size()},
                {"original", {{"accuracy", original.accuracy},
                              {"mean_confidence_correct", original.mean_confidence_correct}}},
                {"rescaled", {{"accuracy", rescaled.accuracy},
                              {"mean_confidence_correct", rescaled.mean_confidence_correct}}}};
    write_json(report, out_dir + "/report.json");
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_nullspace(const std::string& model_path, const std::string& out_dir) {
    write_manifest(json{{"command", "nullspace"}, {"model", model_path}, {"out", out_dir}},
                   out_dir);
    const Network f = load_network(model_path);
    const NetworkNullSpace ns = extract_null_space(f);

    const Matrix& w1 = f.layers.front().weights;
    const double w1_scale = frobenius_norm(w1);
    double max_residual = 0.0, max_cross_dot = 0.0, max_norm_dev = 0.0;
    for (std::size_t a = 0; a < ns.basis.size(); ++a) {
        const Vector& v = ns.basis.vectors[a];
        max_residual = std::max(max_residual, norm2(matvec(w1, v)));
        max_norm_dev = std::max(max_norm_dev, std::abs(norm2(v) - 1.0));
        if (a + 1 < ns.basis.size())
            max_cross_dot =
                std::max(max_cross_dot, std::abs(dot(v, ns.basis.vectors[a + 1])));
    }

    json report{{"command", "nullspace"},
                {"ambient_dim", ns.ambient_dim()},
                {"dimension", ns.dimension()},
                {"rank_w1", ns.ambient_dim() - ns.dimension()},
                {"max_w1v_residual_relative", w1_scale > 0 ? max_residual / w1_scale : 0.0},
                {"max_adjacent_basis_dot", max_cross_dot},
                {"max_basis_norm_deviation", max_norm_dev}};
    write_json(report, out_dir + "/report.json");
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_stego(const std::string& model_path, const std::string& data_dir, std::size_t hidden_idx,
              std::size_t cover_idx, double alpha1, const std::string& out_dir) {
    write_manifest(json{{"command", "stego"},
                        {"model", model_path},
                        {"data_dir", data_dir},
                        {"hidden_idx", hidden_idx},
                        {"cover_idx", cover_idx},
                        {"alpha1", alpha1},
                        {"out", out_dir}},
                   out_dir);
    const Network f = load_network(model_path);
    const LabeledDataset data = load_train_split(data_dir);
    if (hidden_idx >= data.size() || cover_idx >= data.size())
        throw std::runtime_error("image index out of range (dataset has " +
                                 std::to_string(data.size()) + " images)");
    const NetworkNullSpace ns = extract_null_space(f);
    const StegoArtifact art =
        compose_stego(f, ns, data.images[hidden_idx], data.images[cover_idx], alpha1);
    const StegoReport verdict = verify_stego(f, art);

    const std::size_t h = data.height, w = data.width;
    encode_image(art.cover, h, w, out_dir + "/cover.pgm");
    encode_image(art.hidden, h, w, out_dir + "/hidden.pgm");
    encode_image(art.stego, h, w, out_dir + "/stego.pgm");
    write_display_image(art.hidden_perp, h, w, out_dir + "/hidden_perp.pgm");
    write_display_image(art.cover_null, h, w, out_dir + "/cover_null.pgm");

    json report{{"command", "stego"},
                {"hidden_label", data.labels[hidden_idx]},
                {"cover_label", data.labels[cover_idx]},
                {"alpha1", art.alpha1},
                {"alpha2", art.alpha2},
                {"prediction_on_stego", prediction_json(art.prediction_on_stego)},
                {"prediction_on_scaled_hidden", prediction_json(art.prediction_on_scaled_hidden)},
                {"class_match", verdict.class_match},
                {"softmax_gap", verdict.softmax_gap},
                {"confidence", verdict.confidence}};
    write_json(report, out_dir + "/report.json");
    std::cout << report.dump(2) << "\n";
    return verdict.class_match ? 0 : 1;
}

int cmd_inspect(const std::string& model_path, const std::string& image_path,
                const std::string& data_dir, long index, const std::string& out_dir) {
    write_manifest(json{{"command", "inspect"},
                        {"model", model_path},
                        {"image", image_path},
                        {"data_dir", data_dir},
                        {"index", index},
                        {"out", out_dir}},
                   out_dir);
    const Network f = load_network(model_path);

    Vector x;
    std::size_t h = 0, w = 0;
    if (!image_path.empty()) {
        const DecodedImage img = decode_image(image_path);
        x = img.values;
        h = img.height;
        w = img.width;
    } else if (!data_dir.empty() && index >= 0) {
        const LabeledDataset data = load_train_split(data_dir);
        if (static_cast<std::size_t>(index) >= data.size())
            throw std::runtime_error("image index out of range");
        x = data.images[static_cast<std::size_t>(index)];
        h = data.height;
        w = data.width;
    } else {
        throw std::runtime_error("inspect needs --image or --data-dir with --index");
    }

    const NetworkNullSpace ns = extract_null_space(f);
    const NnView view = what_nn_sees(f, ns, x);

    encode_image(x, h, w, out_dir + "/input.pgm");
    write_display_image(view.seen, h, w, out_dir + "/seen.pgm");
    write_display_image(view.unseen, h, w, out_dir + "/unseen.pgm");

    json report{{"command", "inspect"},
                {"prediction_on_input", prediction_json(predict(f, x))},
                {"prediction_on_seen", prediction_json(predict(f, view.seen))},
                {"seen_display_scale", display_scale(view.seen)},
                {"unseen_display_scale", display_scale(view.unseen)},
                {"null_dimension", ns.dimension()}};
    write_json(report, out_dir + "/report.json");
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_convnull(const std::string& kernel_spec, const std::string& shape_spec,
                 const std::string& padding_name, std::size_t trials, std::size_t num_kernels,
                 std::uint64_t seed, const std::string& out_dir) {
    write_manifest(json{{"command", "convnull"},
                        {"kernel", kernel_spec},
                        {"shape", shape_spec},
                        {"padding", padding_name},
                        {"trials", trials},
                        {"num_kernels", num_kernels},
                        {"seed", seed},
                        {"out", out_dir}},
                   out_dir);
    const auto [k1, k2] = parse_dims(kernel_spec, "--kernel");
    const auto [n1, n2] = parse_dims(shape_spec, "--shape");
    const conv::Padding padding =
        padding_name == "same" ? conv::Padding::same : conv::Padding::valid;

    Rng rng(seed);
    conv::Kernel kernel{Matrix(k1, k2)};
    for (double& v : kernel.weights.data) v = rng.uniform(-1.0, 1.0);
    const conv::ConvOperator op = conv::lower(kernel, n1, n2, padding);
    const std::size_t nullity = op.matrix.cols - rank(op.matrix);

    json report{{"command", "convnull"},
                {"kernel", {{"rows", k1}, {"cols", k2}}},
                {"input_shape", {{"rows", n1}, {"cols", n2}}},
                {"padding", padding_name},
                {"matrix_shape", {{"rows", op.matrix.rows}, {"cols", op.matrix.cols}}},
                {"nullity", nullity},
                {"shape_bound", op.matrix.cols - std::min(op.matrix.rows, op.matrix.cols)}};

    if (num_kernels > 0) {
        std::vector<conv::ConvOperator> ops;
        for (std::size_t k = 0; k < num_kernels; ++k) {
            conv::Kernel extra{Matrix(k1, k2)};
            Rng krng = Rng::substream(seed, k + 1);
            for (double& v : extra.weights.data) v = krng.uniform(-1.0, 1.0);
            ops.push_back(conv::lower(extra, n1, n2, padding));
        }
        report["intersection"] = {{"num_kernels", num_kernels},
                                  {"dimension", conv::intersect_null_spaces(ops).size()}};
    }
    if (trials > 0)
        report["full_rank_survey"] = {
            {"trials", trials},
            {"fraction_full_rank", conv::full_rank_survey(n1, n2, k1, k2, padding, trials, seed)}};

    write_json(report, out_dir + "/report.json");
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Null-space analysis of fully connected networks: training, null-space "
                 "extraction, image steganography, and convolution lowering"};
    app.require_subcommand(1);

    std::string data_dir, out_dir = "out", model_path, widths = "784,32,16,10";
    std::string image_path, kernel_spec = "3x3", shape_spec = "28x28", padding = "valid";
    double alpha1 = 0.2, lr = 0.1;
    std::size_t epochs = 10, trials = 0, num_kernels = 0, hidden_idx = 0, cover_idx = 0;
    long index = -1;
    std::uint64_t seed = 1;

    CLI::App* train_cmd = app.add_subcommand("train", "Train a network on an IDX dataset");
    train_cmd->add_option("--data-dir", data_dir, "Directory with IDX train files")->required();
    train_cmd->add_option("--out", out_dir, "Output directory");
    train_cmd->add_option("--model", model_path, "Model output path (default <out>/model.nspec)");
    train_cmd->add_option("--widths", widths, "Comma-separated layer widths");
    train_cmd->add_option("--alpha1", alpha1, "Rescale factor for augmentation");
    train_cmd->add_option("--epochs", epochs, "Training epochs");
    train_cmd->add_option("--lr", lr, "Learning rate");
    train_cmd->add_option("--seed", seed, "PRNG seed");

    CLI::App* ns_cmd = app.add_subcommand("nullspace", "Extract a model's null space");
    ns_cmd->add_option("--model", model_path, "Model file")->required();
    ns_cmd->add_option("--out", out_dir, "Output directory");

    CLI::App* stego_cmd =
        app.add_subcommand("stego", "Compose a stego image from two dataset images");
    stego_cmd->add_option("--model", model_path, "Model file")->required();
    stego_cmd->add_option("--data-dir", data_dir, "Directory with IDX train files")->required();
    stego_cmd->add_option("--hidden-idx", hidden_idx, "Hidden image index")->required();
    stego_cmd->add_option("--cover-idx", cover_idx, "Cover image index")->required();
    stego_cmd->add_option("--alpha1", alpha1, "Hidden component weight");
    stego_cmd->add_option("--out", out_dir, "Output directory");

    CLI::App* inspect_cmd =
        app.add_subcommand("inspect", "Split an image into seen/unseen components");
    inspect_cmd->add_option("--model", model_path, "Model file")->required();
    inspect_cmd->add_option("--image", image_path, "PGM image to inspect");
    inspect_cmd->add_option("--data-dir", data_dir, "Directory with IDX train files");
    inspect_cmd->add_option("--index", index, "Dataset image index");
    inspect_cmd->add_option("--out", out_dir, "Output directory");

    CLI::App* conv_cmd = app.add_subcommand("convnull", "Convolution null-space analysis");
    conv_cmd->add_option("--kernel", kernel_spec, "Kernel shape k1xk2");
    conv_cmd->add_option("--shape", shape_spec, "Input image shape n1xn2");
    conv_cmd->add_option("--padding", padding, "Padding mode")
        ->check(CLI::IsMember({"valid", "same"}));
    conv_cmd->add_option("--trials", trials, "Run a full-rank survey with this many trials");
    conv_cmd->add_option("--num-kernels", num_kernels,
                         "Intersect the null spaces of this many random kernels");
    conv_cmd->add_option("--seed", seed, "PRNG seed");
    conv_cmd->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(train_cmd))
            return cmd_train(data_dir, out_dir, model_path, widths, alpha1, epochs, lr, seed);
        if (app.got_subcommand(ns_cmd)) return cmd_nullspace(model_path, out_dir);
        if (app.got_subcommand(stego_cmd))
            return cmd_stego(model_path, data_dir, hidden_idx, cover_idx, alpha1, out_dir);
        if (app.got_subcommand(inspect_cmd))
            return cmd_inspect(model_path, image_path, data_dir, index, out_dir);
        if (app.got_subcommand(conv_cmd))
            return cmd_convnull(kernel_spec, shape_spec, padding, trials, num_kernels, seed,
                                out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
