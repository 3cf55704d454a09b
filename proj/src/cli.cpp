#include "spikezip/cli.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "spikezip/cae.hpp"
#include "spikezip/entropy.hpp"
#include "spikezip/evaluation.hpp"
#include "spikezip/spike_data.hpp"

namespace spikezip {

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

using Manifest = std::vector<std::pair<std::string, std::string>>;

/// Every command records its effective configuration next to its output, so
/// a run can be reproduced from the artifact alone.
void write_manifest(const std::string& out_path, const std::string& command, const Manifest& kv) {
    const std::string path = out_path + ".manifest";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "tool=spikezip\nmanifest_version=1\ncommand=" << command << "\n";
    for (const auto& [key, value] : kv) out << key << "=" << value << "\n";
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<uint8_t> read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

/// Detection + alignment + ground-truth labeling with the window the model
/// expects; the shared front end of train/compress/decompress/sort-eval.
SpikeBatch load_batch(const std::string& path, int d_samples) {
    const auto seq = load_sequence(path);
    auto batch = extract_align(seq, detect_events(seq, d_samples), d_samples);
    if (batch.count() == 0) throw std::runtime_error(path + ": no spikes detected");
    label_events(batch, seq);
    return batch;
}

/// Expands every `--config FILE` (or `--config=FILE`) into the flags the file
/// contains.  Lines are `key=value`, blank, or `#` comments; flags given
/// explicitly on the command line take precedence over the file.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
    std::vector<std::string> paths;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw std::invalid_argument("--config needs a file path");
            paths.push_back(args[i + 1]);
        } else if (args[i].rfind("--config=", 0) == 0) {
            paths.push_back(args[i].substr(9));
        }
    }
    auto given = [&args](const std::string& key) {
        const std::string flag = "--" + key;
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    auto trim = [](const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::vector<std::string> result = args;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument(path + ": cannot open config file");
        std::string line;
        while (std::getline(in, line)) {
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument(path + ": expected key=value, got '" + line + "'");
            const std::string key = trim(line.substr(0, eq));
            if (key.empty())
                throw std::invalid_argument(path + ": empty key in '" + line + "'");
            if (key == "config" || given(key)) continue;
            result.push_back("--" + key);
            result.push_back(trim(line.substr(eq + 1)));
        }
    }
    return result;
}

struct CaeFlags {
    int k = 256;
    int mspk = 0;  // 0: take the dataset's channel count
    int nfeat = 16;
    int width = 256;
    int groups = 32;
    int wbits = 16;
    int d = 48;

    void attach(CLI::App* cmd) {
        cmd->add_option("--k", k, "codebook size (power of two)");
        cmd->add_option("--mspk", mspk, "spike ports per input group (0: from data)");
        cmd->add_option("--nfeat", nfeat, "latent feature vectors per group");
        cmd->add_option("--width", width, "internal channel width");
        cmd->add_option("--groups", groups, "grouped-convolution group count");
        cmd->add_option("--wbits", wbits, "raw sample bit width");
        cmd->add_option("--d", d, "samples per spike window");
    }

    CaeConfig config(int data_ports) const {
        CaeConfig c;
        c.k_codewords = k;
        c.m_spk = mspk > 0 ? mspk : data_ports;
        c.n_feat = nfeat;
        c.width = width;
        c.groups = groups;
        c.w_bits = wbits;
        c.d_samples = d;
        c.validate();
        return c;
    }
};

int do_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"spikezip: compressive autoencoder toolkit for extracellular spike data"};
    app.require_subcommand(1);

    // `run_cli` has already folded config files into `args`; the option is
    // registered here so it parses cleanly and shows up in --help.
    std::string config_path;
    auto add_config = [&config_path](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value flag file (explicit flags win)");
    };

    // ---- gen ----------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic labeled recording");
    add_config(gen_cmd);
    std::string gen_out;
    int gen_templates = 2, gen_channels = 1, gen_d = 48, gen_refractory = -1;
    double gen_noise = 0.1, gen_duration = 10.0, gen_sample_rate = 24000.0, gen_noise_rate = 100.0;
    std::vector<double> gen_rates = {10.0}, gen_amps = {1.0};
    uint64_t gen_seed = 1;
    gen_cmd->add_option("--out", gen_out, "output .spkd path")->required();
    gen_cmd->add_option("--templates", gen_templates, "number of distinct units");
    gen_cmd->add_option("--noise", gen_noise, "background noise sigma");
    gen_cmd->add_option("--duration", gen_duration, "seconds of recording");
    gen_cmd->add_option("--rate", gen_rates, "firing rate(s) in Hz")->delimiter(',');
    gen_cmd->add_option("--amp", gen_amps, "per-unit amplitude(s)")->delimiter(',');
    gen_cmd->add_option("--channels", gen_channels, "electrode channels");
    gen_cmd->add_option("--d", gen_d, "samples per spike window");
    gen_cmd->add_option("--sample-rate", gen_sample_rate, "samples per second");
    gen_cmd->add_option("--noise-rate", gen_noise_rate, "background fragment rate in Hz");
    gen_cmd->add_option("--refractory", gen_refractory, "dead time in samples (-1: auto)");
    gen_cmd->add_option("--seed", gen_seed, "generator seed");
    gen_cmd->callback([&] {
        GenOptions opts;
        opts.sample_rate = gen_sample_rate;
        opts.duration_seconds = gen_duration;
        opts.noise_sigma = gen_noise;
        opts.firing_rates_hz = gen_rates;
        opts.amplitudes = gen_amps;
        opts.noise_spike_rate_hz = gen_noise_rate;
        opts.channels = gen_channels;
        opts.refractory_samples = gen_refractory;
        opts.seed = gen_seed;
        const auto seq = generate(make_templates(gen_templates, gen_d), opts);
        save_sequence(gen_out, seq);
        out << "file=" << gen_out << "\nevents=" << seq.truth_times.size() << "\n";
        write_manifest(gen_out, "gen",
                       {{"out", gen_out},
                        {"templates", std::to_string(gen_templates)},
                        {"channels", std::to_string(gen_channels)},
                        {"d", std::to_string(gen_d)},
                        {"noise", fmt9(gen_noise)},
                        {"duration", fmt9(gen_duration)},
                        {"sample_rate", fmt9(gen_sample_rate)},
                        {"noise_rate", fmt9(gen_noise_rate)},
                        {"refractory", std::to_string(gen_refractory)},
                        {"seed", std::to_string(gen_seed)},
                        {"events", std::to_string(seq.truth_times.size())}});
    });

    // ---- train --------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train a model on a recording");
    add_config(train_cmd);
    std::string train_in, train_out;
    CaeFlags train_flags;
    int train_epochs = 300, train_batch = 48, train_jitter = 0;
    double train_lr = 1e-3;
    uint64_t train_seed = 1;
    train_cmd->add_option("--in", train_in, "input .spkd recording")->required();
    train_cmd->add_option("--out", train_out, "output checkpoint path")->required();
    train_flags.attach(train_cmd);
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--batch-size", train_batch, "minibatch size");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--jitter", train_jitter,
                          "denoising mode: train against clean targets under "
                          "this misalignment width (0: off)");
    train_cmd->add_option("--seed", train_seed, "build/shuffle seed");
    train_cmd->callback([&] {
        const auto batch = load_batch(train_in, train_flags.d);
        auto config = train_flags.config(batch.ports());
        config.denoising = train_jitter > 0;
        auto model = CaeModel::build(config, train_seed);
        TrainOptions topt;
        topt.epochs = train_epochs;
        topt.batch_size = train_batch;
        topt.lr = train_lr;
        topt.seed = train_seed;
        if (train_jitter > 0) {
            const auto pair = jitter(batch, train_jitter, train_seed ^ 0x6a1d);
            train(model, pair.jittered.spikes, pair.clean.spikes, topt);
        } else {
            train(model, batch.spikes, nullptr, topt);
        }
        model.save(train_out);
        const double quality = sndr(batch.spikes, model.reconstruct(batch.spikes));
        out << "file=" << train_out << "\nspikes=" << batch.count()
            << "\nfinal_loss=" << fmt9(model.loss_history.back())
            << "\ntrain_sndr_db=" << fmt9(quality) << "\n";
        write_manifest(train_out, "train",
                       {{"in", train_in},
                        {"out", train_out},
                        {"k", std::to_string(config.k_codewords)},
                        {"mspk", std::to_string(config.m_spk)},
                        {"nfeat", std::to_string(config.n_feat)},
                        {"width", std::to_string(config.width)},
                        {"groups", std::to_string(config.groups)},
                        {"wbits", std::to_string(config.w_bits)},
                        {"d", std::to_string(config.d_samples)},
                        {"epochs", std::to_string(train_epochs)},
                        {"batch_size", std::to_string(train_batch)},
                        {"lr", fmt9(train_lr)},
                        {"jitter", std::to_string(train_jitter)},
                        {"seed", std::to_string(train_seed)},
                        {"config_digest", std::to_string(config.digest())},
                        {"spikes", std::to_string(batch.count())},
                        {"final_loss", fmt9(model.loss_history.back())},
                        {"train_sndr_db", fmt9(quality)}});
    });

    // ---- compress ------------------------------------------------------
    auto* comp_cmd = app.add_subcommand("compress", "encode a recording into a bitstream");
    add_config(comp_cmd);
    std::string comp_in, comp_model, comp_out;
    comp_cmd->add_option("--in", comp_in, "input .spkd recording")->required();
    comp_cmd->add_option("--model", comp_model, "trained checkpoint")->required();
    comp_cmd->add_option("--out", comp_out, "output .spkc bitstream")->required();
    comp_cmd->callback([&] {
        const auto model = CaeModel::load(comp_model);
        const auto batch = load_batch(comp_in, model.config.d_samples);
        if (batch.ports() != model.config.m_spk)
            throw std::runtime_error("recording channel count does not match the checkpoint");
        std::vector<int> indexes;
        model.reconstruct(batch.spikes, &indexes);
        const auto hist = SymbolHistogram::from_indexes(indexes, model.config.k_codewords);
        const auto block = encode_block(indexes, huffman_build(hist), model.config);
        write_binary(comp_out, block.serialize());
        const double rate = block.payload_bits_per_symbol();
        const double cr = compression_ratio(model.config, rate);
        out << "file=" << comp_out << "\nspikes=" << batch.count()
            << "\nbits_per_index=" << fmt9(rate) << "\nindex_entropy_bits=" << fmt9(entropy(hist))
            << "\ncr=" << fmt9(cr) << "\n";
        write_manifest(comp_out, "compress",
                       {{"in", comp_in},
                        {"model", comp_model},
                        {"out", comp_out},
                        {"config_digest", std::to_string(model.config.digest())},
                        {"spikes", std::to_string(batch.count())},
                        {"bits_per_index", fmt9(rate)},
                        {"index_entropy_bits", fmt9(entropy(hist))},
                        {"cr", fmt9(cr)}});
    });

    // ---- decompress ----------------------------------------------------
    auto* dec_cmd = app.add_subcommand("decompress", "decode a bitstream back into spikes");
    add_config(dec_cmd);
    std::string dec_in, dec_model, dec_out, dec_data;
    dec_cmd->add_option("--in", dec_in, "input .spkc bitstream")->required();
    dec_cmd->add_option("--model", dec_model, "trained checkpoint")->required();
    dec_cmd->add_option("--out", dec_out, "output .csv reconstruction")->required();
    dec_cmd->add_option("--data", dec_data, "original .spkd recording (adds SNDR)");
    dec_cmd->callback([&] {
        const auto model = CaeModel::load(dec_model);
        const auto block = CompressedBlock::deserialize(read_binary(dec_in));
        if (block.config_digest != model.config.digest())
            throw std::runtime_error("bitstream does not match the checkpoint configuration");
        const auto x_hat = model.decode_indexes(decode_block(block));

        SpikeBatch rebuilt;
        rebuilt.spikes = x_hat;
        const int n = x_hat->dim(0);
        rebuilt.labels.assign(static_cast<size_t>(n), -1);
        rebuilt.overlapped.assign(static_cast<size_t>(n), 0);
        rebuilt.timestamps.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) rebuilt.timestamps[static_cast<size_t>(i)] = i;
        rebuilt.channel_map.resize(static_cast<size_t>(x_hat->dim(1)));
        for (int c = 0; c < x_hat->dim(1); ++c) rebuilt.channel_map[static_cast<size_t>(c)] = c;
        write_batch_csv(dec_out, rebuilt);

        Manifest manifest{{"in", dec_in},
                          {"model", dec_model},
                          {"out", dec_out},
                          {"config_digest", std::to_string(model.config.digest())},
                          {"spikes", std::to_string(n)}};
        out << "file=" << dec_out << "\nspikes=" << n << "\n";
        if (!dec_data.empty()) {
            const auto reference = load_batch(dec_data, model.config.d_samples);
            if (reference.count() != n)
                throw std::runtime_error("reference recording yields a different spike count");
            const double quality = sndr(reference.spikes, x_hat);
            out << "sndr_db=" << fmt9(quality) << "\n";
            manifest.push_back({"data", dec_data});
            manifest.push_back({"sndr_db", fmt9(quality)});
        }
        write_manifest(dec_out, "decompress", manifest);
    });

    // ---- sweep ---------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "rate-quality curves across methods");
    add_config(sweep_cmd);
    std::string sweep_in, sweep_out = "rate_quality.csv", sweep_svg;
    std::vector<int> sweep_ms, sweep_ks;
    CaeFlags sweep_flags;
    int sweep_repeats = 5, sweep_epochs = 150, sweep_batch = 48, sweep_threads = 0;
    double sweep_lr = 1e-3;
    uint64_t sweep_seed = 1;
    sweep_cmd->add_option("--in", sweep_in, "input .spkd recording")->required();
    sweep_cmd->add_option("--out", sweep_out, "output csv path");
    sweep_cmd->add_option("--svg", sweep_svg, "optional line-chart path");
    sweep_cmd->add_option("--ms", sweep_ms, "kept-coefficient grid for pca/dct/dwt")
        ->delimiter(',');
    sweep_cmd->add_option("--ks", sweep_ks, "codebook sizes for the autoencoder")->delimiter(',');
    sweep_flags.attach(sweep_cmd);
    sweep_cmd->add_option("--repeats", sweep_repeats, "50/50 split repeats");
    sweep_cmd->add_option("--epochs", sweep_epochs, "training epochs per repeat");
    sweep_cmd->add_option("--batch-size", sweep_batch, "minibatch size");
    sweep_cmd->add_option("--lr", sweep_lr, "learning rate");
    sweep_cmd->add_option("--threads", sweep_threads, "worker cap (0: SPIKEZIP_THREADS)");
    sweep_cmd->add_option("--seed", sweep_seed, "split/train seed");
    sweep_cmd->callback([&] {
        const auto batch = load_batch(sweep_in, sweep_flags.d);
        SweepOptions opts;
        opts.baseline_ms = sweep_ms;
        for (int k : sweep_ks) {
            CaeFlags f = sweep_flags;
            f.k = k;
            opts.cae_configs.push_back(f.config(batch.ports()));
        }
        opts.repeats = sweep_repeats;
        opts.seed = sweep_seed;
        opts.w_bits = sweep_flags.wbits;
        opts.threads = sweep_threads;
        opts.train.epochs = sweep_epochs;
        opts.train.batch_size = sweep_batch;
        opts.train.lr = sweep_lr;
        const auto points = sweep(batch, opts);
        write_rate_quality_csv(sweep_out, points);
        if (!sweep_svg.empty()) write_rate_quality_svg(sweep_svg, points);
        for (const auto& p : points)
            out << p.method << " " << p.setting << " cr=" << fmt9(p.cr)
                << " sndr_db=" << fmt9(p.sndr_db) << "\n";
        write_manifest(sweep_out, "sweep",
                       {{"in", sweep_in},
                        {"out", sweep_out},
                        {"svg", sweep_svg},
                        {"repeats", std::to_string(sweep_repeats)},
                        {"epochs", std::to_string(sweep_epochs)},
                        {"batch_size", std::to_string(sweep_batch)},
                        {"lr", fmt9(sweep_lr)},
                        {"seed", std::to_string(sweep_seed)},
                        {"points", std::to_string(points.size())}});
    });

    // ---- sort-eval -----------------------------------------------------
    auto* sort_cmd = app.add_subcommand("sort-eval", "sorting accuracy before/after compression");
    add_config(sort_cmd);
    std::string sort_in, sort_model, sort_out = "sorting.csv";
    int sort_k = 0, sort_restarts = 50;
    uint64_t sort_seed = 1;
    sort_cmd->add_option("--in", sort_in, "input .spkd recording")->required();
    sort_cmd->add_option("--model", sort_model, "trained checkpoint")->required();
    sort_cmd->add_option("--out", sort_out, "output csv path");
    sort_cmd->add_option("--k", sort_k, "cluster count (0: template count)");
    sort_cmd->add_option("--restarts", sort_restarts, "k-means restarts");
    sort_cmd->add_option("--seed", sort_seed, "k-means seed");
    sort_cmd->callback([&] {
        const auto model = CaeModel::load(sort_model);
        const auto seq = load_sequence(sort_in);
        auto batch = extract_align(seq, detect_events(seq, model.config.d_samples),
                                   model.config.d_samples);
        label_events(batch, seq);
        std::vector<int> keep;
        for (int r = 0; r < batch.count(); ++r)
            if (batch.labels[static_cast<size_t>(r)] >= 0) keep.push_back(r);
        if (keep.size() < 2) throw std::runtime_error("too few labeled spikes to sort");
        std::vector<int> labels;
        Eigen::MatrixXd flat(static_cast<Eigen::Index>(keep.size()),
                             batch.ports() * batch.window());
        const auto full = to_matrix(batch.spikes);
        for (size_t i = 0; i < keep.size(); ++i) {
            flat.row(static_cast<Eigen::Index>(i)) = full.row(keep[i]);
            labels.push_back(batch.labels[static_cast<size_t>(keep[i])]);
        }
        const int k = sort_k > 0 ? sort_k : static_cast<int>(seq.templates.size());

        std::vector<int> keep_indexes;
        std::vector<double> raw_values(keep.size() *
                                       static_cast<size_t>(batch.ports() * batch.window()));
        for (size_t i = 0; i < keep.size(); ++i)
            for (int j = 0; j < batch.ports() * batch.window(); ++j)
                raw_values[i * static_cast<size_t>(batch.ports() * batch.window()) +
                           static_cast<size_t>(j)] = flat(static_cast<Eigen::Index>(i), j);
        auto raw = nn::Tensor::from(
            {static_cast<int>(keep.size()), batch.ports(), batch.window()}, std::move(raw_values));
        const auto rebuilt = model.reconstruct(raw, &keep_indexes);
        const auto hist = SymbolHistogram::from_indexes(keep_indexes, model.config.k_codewords);
        const double cr = compression_ratio(model.config, std::max(entropy(hist), 0.01));

        SortingReport report;
        report.accuracy_before = sorting_accuracy(flat, labels, k, sort_restarts, sort_seed);
        report.accuracy_after =
            {sorting_accuracy(to_matrix(rebuilt), labels, k, sort_restarts, sort_seed)};
        report.crs = {cr};
        report.noise_sigma = seq.noise_sigma;
        report.sequence_id = sort_in;
        write_sorting_csv(sort_out, report);
        out << "accuracy_before=" << fmt9(report.accuracy_before)
            << "\naccuracy_after=" << fmt9(report.accuracy_after[0]) << "\ncr=" << fmt9(cr)
            << "\n";
        write_manifest(sort_out, "sort-eval",
                       {{"in", sort_in},
                        {"model", sort_model},
                        {"out", sort_out},
                        {"k", std::to_string(k)},
                        {"restarts", std::to_string(sort_restarts)},
                        {"seed", std::to_string(sort_seed)},
                        {"accuracy_before", fmt9(report.accuracy_before)},
                        {"accuracy_after", fmt9(report.accuracy_after[0])},
                        {"cr", fmt9(cr)}});
    });

    // ---- stats ---------------------------------------------------------
    auto* stats_cmd = app.add_subcommand("stats", "parameter/MAC accounting and codeword usage");
    add_config(stats_cmd);
    std::string stats_model, stats_in;
    CaeFlags stats_flags;
    stats_flags.mspk = 4;  // reference architecture by default
    uint64_t stats_seed = 1;
    stats_cmd->add_option("--model", stats_model, "trained checkpoint (otherwise built fresh)");
    stats_cmd->add_option("--in", stats_in, "recording for codeword usage statistics");
    stats_flags.attach(stats_cmd);
    stats_cmd->add_option("--seed", stats_seed, "build seed when no checkpoint is given");
    stats_cmd->callback([&] {
        const CaeModel model = stats_model.empty()
                                   ? CaeModel::build(stats_flags.config(stats_flags.mspk),
                                                     stats_seed)
                                   : CaeModel::load(stats_model);
        const auto& c = model.config;
        out << "k=" << c.k_codewords << " mspk=" << c.m_spk << " nfeat=" << c.n_feat
            << " d=" << c.d_samples << " width=" << c.width << " groups=" << c.groups << "\n";
        out << "encoder_params=" << model.encoder_param_count() << "\n";
        out << "decoder_params=" << model.decoder_param_count() << "\n";
        out << "encoder_macs_per_spike=" << model.encoder_macs_per_spike() << "\n";
        out << "decoder_macs_per_spike=" << model.decoder_macs_per_spike() << "\n";
        out << "macs_convention=multiplies in convolutions and VQ distance products per spike, "
               "divided by the ports per group; normalization, activations and pooling excluded\n";
        out << "reference_encoder_macs_per_spike=79250\n";
        out << "reference_applies_to=mspk=4 d=48 nfeat=16 k=256\n";
        Manifest manifest{{"encoder_params", std::to_string(model.encoder_param_count())},
                          {"decoder_params", std::to_string(model.decoder_param_count())},
                          {"encoder_macs_per_spike",
                           std::to_string(model.encoder_macs_per_spike())},
                          {"decoder_macs_per_spike",
                           std::to_string(model.decoder_macs_per_spike())},
                          {"reference_encoder_macs_per_spike", "79250"},
                          {"config_digest", std::to_string(c.digest())}};
        if (!stats_in.empty()) {
            const auto batch = load_batch(stats_in, c.d_samples);
            if (batch.ports() != c.m_spk)
                throw std::runtime_error("recording channel count does not match the model");
            const auto usage = codeword_stats(model, batch.spikes);
            out << "index_entropy_bits=" << fmt9(usage.entropy_bits) << "\n";
            out << "codeword_usage_fraction=" << fmt9(usage.usage_fraction) << "\n";
            manifest.push_back({"index_entropy_bits", fmt9(usage.entropy_bits)});
            manifest.push_back({"codeword_usage_fraction", fmt9(usage.usage_fraction)});
        }
        write_manifest(stats_model.empty() ? "stats" : stats_model, "stats", manifest);
    });

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("spikezip");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        std::ostringstream usage;
        const int code = app.exit(e, usage, usage);
        (code == 0 ? out : err) << usage.str();
        return code == 0 ? 0 : 1;
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return do_run(expand_config_args(args), out, err);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace spikezip
