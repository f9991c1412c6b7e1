// Copyright 2026 The efl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "efl/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "efl/bench.hpp"
#include "efl/metrics.hpp"

namespace efl {

namespace {

// One string-valued setting per key. Flags parse into `flag`; resolve() then
// walks flag > env (EFL_KEY) > config file > default.
struct Settings {
    std::map<std::string, std::string> file_values;
    CLI::App* cmd = nullptr;

    std::string resolve(const std::string& key, const std::string& fallback) const {
        std::string flag = "--" + key;
        if (cmd->count(flag) > 0) return cmd->get_option(flag)->as<std::string>();
        std::string env_key = "EFL_";
        for (char c : key) env_key += c == '-' ? '_' : char(std::toupper(c));
        if (const char* env = std::getenv(env_key.c_str())) return env;
        auto it = file_values.find(key);
        if (it != file_values.end()) return it->second;
        return fallback;
    }

    bool given(const std::string& key) const {
        if (cmd->count("--" + key) > 0) return true;
        std::string env_key = "EFL_";
        for (char c : key) env_key += c == '-' ? '_' : char(std::toupper(c));
        if (std::getenv(env_key.c_str())) return true;
        return file_values.count(key) > 0;
    }
};

uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("value for " + key + " is not an integer: '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("value for " + key + " is not a number: '" + value + "'");
    }
}

std::vector<uint32_t> parse_dims(const std::string& key, const std::string& value) {
    std::vector<uint32_t> dims;
    std::string cur;
    for (char c : value) {
        if (c == ',') {
            dims.push_back(uint32_t(parse_u64(key, cur)));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) dims.push_back(uint32_t(parse_u64(key, cur)));
    if (dims.empty()) throw ConfigError(key + " needs at least one width");
    return dims;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::map<std::string, std::string> values;
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto strip = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config file line " + std::to_string(lineno) +
                              " is not key=value");
        values[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    }
    return values;
}

RunConfig build_run_config(const Settings& s) {
    RunConfig cfg;
    std::string mode = s.resolve("mode", "hfl");
    if (mode == "hfl") {
        cfg.mode = Topology::HFL;
    } else if (mode == "sdt") {
        cfg.mode = Topology::SDT;
    } else {
        throw ConfigError("mode must be hfl or sdt, got '" + mode + "'");
    }
    std::string cm = s.resolve("channel-mode", "attested");
    if (cm == "attested") {
        cfg.channel_mode = ChannelMode::Attested;
    } else if (cm == "native") {
        cfg.channel_mode = ChannelMode::Native;
    } else {
        throw ConfigError("channel-mode must be attested or native, got '" + cm + "'");
    }
    cfg.num_workers = uint32_t(parse_u64("workers", s.resolve("workers", "4")));
    cfg.rounds = parse_u64("rounds", s.resolve("rounds", "10"));
    cfg.local_batch = uint32_t(parse_u64("batch-size", s.resolve("batch-size", "64")));
    cfg.eval_permille =
        uint16_t(parse_u64("eval-permille", s.resolve("eval-permille", "100")));
    cfg.seed = parse_u64("seed", s.resolve("seed", "1"));

    cfg.dlrm = default_dlrm_config();
    cfg.dlrm.num_dense = uint16_t(parse_u64("num-dense", s.resolve("num-dense", "13")));
    cfg.dlrm.num_sparse = uint16_t(parse_u64("num-sparse", s.resolve("num-sparse", "26")));
    uint32_t vocab = uint32_t(parse_u64("vocab", s.resolve("vocab", "1000")));
    cfg.dlrm.vocab_sizes.assign(cfg.dlrm.num_sparse, vocab);
    cfg.dlrm.embed_dim = uint32_t(parse_u64("embed-dim", s.resolve("embed-dim", "16")));
    cfg.dlrm.bottom_dims = parse_dims("bottom-dims", s.resolve("bottom-dims", "64,16"));
    cfg.dlrm.top_dims = parse_dims("top-dims", s.resolve("top-dims", "64,1"));
    cfg.dlrm.learning_rate = float(parse_double("lr", s.resolve("lr", "0.1")));
    cfg.dlrm.seed = parse_u64("model-seed", s.resolve("model-seed", "1"));

    cfg.build_id = s.resolve("build-id", kDefaultBuildId);
    cfg.attest_config_id = s.resolve("attest-config-id", "");
    std::string trust_hex = s.resolve("trust-seed", "");
    std::string authority_file = s.resolve("authority-key", "");
    if (!authority_file.empty()) {
        std::ifstream f(authority_file);
        if (!f) throw ConfigError("cannot read authority key file: " + authority_file);
        f >> trust_hex;
    }
    if (!trust_hex.empty()) {
        Bytes seed;
        try {
            seed = from_hex(trust_hex);
        } catch (const FormatError& e) {
            throw ConfigError(std::string("trust-seed is not hex: ") + e.what());
        }
        if (seed.size() != 32) throw ConfigError("trust-seed must be 64 hex characters");
        std::copy(seed.begin(), seed.end(), cfg.trust_seed.begin());
    }

    cfg.ps_listen = s.resolve("ps-listen", "127.0.0.1:7700");
    cfg.ps_addr = s.resolve("ps-addr", "127.0.0.1:7700");
    cfg.chief_listen = s.resolve("chief-listen", "127.0.0.1:7701");
    cfg.chief_addr = s.resolve("chief-addr", "127.0.0.1:7701");
    cfg.worker_index = uint32_t(parse_u64("index", s.resolve("index", "0")));
    cfg.export_path = s.resolve("export", "");
    cfg.handshake_timeout = std::chrono::milliseconds(
        parse_u64("handshake-timeout-ms", s.resolve("handshake-timeout-ms", "10000")));
    cfg.io_timeout = std::chrono::milliseconds(
        parse_u64("io-timeout-ms", s.resolve("io-timeout-ms", "60000")));
    cfg.validate();
    return cfg;
}

// run-local and bench accept either a dataset file or an inline generation
Dataset acquire_dataset(const Settings& s, const RunConfig& cfg) {
    std::string dataset_path = s.resolve("dataset", "");
    if (!dataset_path.empty()) return read_file(dataset_path);
    if (!s.given("samples"))
        throw ConfigError("need either --dataset or --samples for the data source");
    SyntheticSpec spec;
    spec.num_samples = parse_u64("samples", s.resolve("samples", "0"));
    spec.num_dense = cfg.dlrm.num_dense;
    spec.num_sparse = cfg.dlrm.num_sparse;
    spec.vocab_sizes = cfg.dlrm.vocab_sizes;
    spec.seed = parse_u64("data-seed", s.resolve("data-seed", "1"));
    spec.teacher_noise = parse_double("noise", s.resolve("noise", "0"));
    return generate(spec);
}

int report_outcome(const TrainReport& report, const Settings& s, std::ostream& out,
                   std::ostream& err) {
    std::string metrics_path = s.resolve("metrics", "");
    if (!metrics_path.empty()) {
        write_report_csv(report, metrics_path);
    } else {
        out << format_report_csv(report);
    }
    if (report.aborted) {
        err << "run aborted (" << report.abort_code << "): " << report.abort_detail
            << "\n";
        return kExitAbort;
    }
    return kExitOk;
}

int run_subcommand(const std::string& name, const Settings& s, std::ostream& out,
                   std::ostream& err) {
    if (name == "gen-data") {
        if (!s.given("samples")) throw UsageError("--samples is required");
        if (!s.given("out")) throw UsageError("--out is required");
        SyntheticSpec spec;
        spec.num_samples = parse_u64("samples", s.resolve("samples", "0"));
        spec.num_dense = uint16_t(parse_u64("num-dense", s.resolve("num-dense", "13")));
        spec.num_sparse = uint16_t(parse_u64("num-sparse", s.resolve("num-sparse", "26")));
        uint32_t vocab = uint32_t(parse_u64("vocab", s.resolve("vocab", "1000")));
        spec.vocab_sizes.assign(spec.num_sparse, vocab);
        spec.seed = parse_u64("seed", s.resolve("seed", "1"));
        spec.teacher_noise = parse_double("noise", s.resolve("noise", "0"));
        Dataset ds = generate(spec);
        std::string out_path = s.resolve("out", "");
        write_file(ds, out_path);
        out << "wrote " << ds.records.size() << " records to " << out_path << "\n";

        uint64_t nshards = parse_u64("shards", s.resolve("shards", "0"));
        if (nshards > 0) {
            std::string prefix = s.resolve("shard-prefix", "");
            if (prefix.empty())
                throw ConfigError("--shards needs --shard-prefix for the output files");
            auto shards = shard(ds, uint32_t(nshards));
            for (const Shard& sh : shards) {
                std::string path = prefix + std::to_string(sh.worker_index) + ".bin";
                write_file(shard_as_dataset(ds, sh), path);
                out << "wrote shard " << sh.worker_index << " (" << sh.records.size()
                    << " records) to " << path << "\n";
            }
        }
        return kExitOk;
    }

    RunConfig cfg = build_run_config(s);

    if (name == "run-ps") {
        TrainReport report = run_ps(cfg, [&](uint16_t port) {
            auto [host, unused] = parse_address(cfg.ps_listen);
            out << "listening " << host << ":" << port << "\n" << std::flush;
        });
        return report_outcome(report, s, out, err);
    }
    if (name == "run-worker") {
        TrainReport report;
        if (cfg.mode == Topology::HFL) {
            std::string shard_path = s.resolve("shard", "");
            if (shard_path.empty()) throw ConfigError("run-worker in hfl mode needs --shard");
            report = run_worker_hfl(cfg, shard_path);
        } else {
            report = run_worker_sdt(cfg);
        }
        return report_outcome(report, s, out, err);
    }
    if (name == "run-chief") {
        std::string dataset_path = s.resolve("dataset", "");
        if (dataset_path.empty()) throw ConfigError("run-chief needs --dataset");
        TrainReport report = run_chief(cfg, dataset_path, [&](uint16_t port) {
            auto [host, unused] = parse_address(cfg.chief_listen);
            out << "listening " << host << ":" << port << "\n" << std::flush;
        });
        return report_outcome(report, s, out, err);
    }
    if (name == "run-local") {
        Dataset data = acquire_dataset(s, cfg);
        LocalRunResult res = run_local(cfg, data);
        return report_outcome(res.ps, s, out, err);
    }
    if (name == "bench") {
        Dataset data = acquire_dataset(s, cfg);
        BenchResult result = run_bench(cfg, data);
        out << bench_summary(result, cfg);
        std::string out_path = s.resolve("out", "");
        if (!out_path.empty()) {
            std::ofstream f(out_path);
            if (!f) throw IoError("cannot open bench output: " + out_path);
            f << bench_csv(result);
        }
        if (result.run_aborted) {
            err << "bench aborted: " << result.abort_detail << "\n";
            return kExitAbort;
        }
        if (!result.parity_ok) {
            err << "parity failure: the security layer leaked into the training math\n";
            return kExitParity;
        }
        return kExitOk;
    }
    throw UsageError("unknown subcommand " + name);
}

void add_common_options(CLI::App* cmd) {
    // everything is string-typed here; Settings::resolve owns conversion so
    // config-file and env values go through the identical parser
    const char* keys[] = {"mode",        "channel-mode", "workers",      "rounds",
                          "batch-size",  "eval-permille", "seed",        "num-dense",
                          "num-sparse",  "vocab",        "embed-dim",    "bottom-dims",
                          "top-dims",    "lr",           "model-seed",   "build-id",
                          "attest-config-id", "trust-seed", "authority-key", "ps-listen",
                          "ps-addr",     "chief-listen", "chief-addr",   "index",
                          "shard",       "dataset",      "samples",      "data-seed",
                          "noise",       "out",          "export",       "metrics",
                          "shards",      "shard-prefix", "handshake-timeout-ms",
                          "io-timeout-ms"};
    for (const char* k : keys)
        cmd->add_option(std::string("--") + k)
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"desk-scale secure federated training for a DLRM click model"};
    app.require_subcommand(1);
    app.footer(
        "exit codes: 0 ok, 2 usage, 3 config, 4 protocol abort, 5 bench parity "
        "failure, 6 i/o\n"
        "settings resolve config file < EFL_* environment < flags");

    struct Sub {
        const char* name;
        const char* desc;
    };
    const Sub subs[] = {
        {"gen-data", "generate a synthetic click dataset (and optional shards)"},
        {"run-ps", "serve as the parameter server"},
        {"run-worker", "train against a parameter server"},
        {"run-chief", "distribute data/config and collect the final model (sdt)"},
        {"run-local", "run a whole topology inside one process"},
        {"bench", "measure native-vs-attested overhead with identical seeds"},
    };
    std::map<std::string, CLI::App*> cmds;
    for (const Sub& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.desc);
        cmd->add_option("--config", "flat key=value settings file");
        add_common_options(cmd);
        cmds[sub.name] = cmd;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return kExitOk;
        }
        err << e.what() << "\n";
        return kExitUsage;
    }

    CLI::App* cmd = app.get_subcommands().front();
    Settings settings;
    settings.cmd = cmd;

    try {
        if (cmd->count("--config") > 0)
            settings.file_values =
                load_config_file(cmd->get_option("--config")->as<std::string>());
        else if (const char* env_cfg = std::getenv("EFL_CONFIG"))
            settings.file_values = load_config_file(env_cfg);
        return run_subcommand(cmd->get_name(), settings, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ChannelError& e) {
        err << "channel error: " << e.what() << "\n";
        return kExitAbort;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace efl
