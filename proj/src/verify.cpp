#include "regraph/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "regraph/process.hpp"

namespace regraph {

namespace {

std::string strip_trailing_ws(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t nl = text.find('\n', line_start);
        std::string_view line = (nl == std::string_view::npos)
                                    ? text.substr(line_start)
                                    : text.substr(line_start, nl - line_start);
        std::size_t end = line.size();
        while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t' || line[end - 1] == '\r'))
            --end;
        out.append(line.substr(0, end));
        if (nl == std::string_view::npos) break;
        out.push_back('\n');
        line_start = nl + 1;
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                tokens.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

bool parse_number(const std::string& token, double& value) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

}  // namespace

ComparePolicy compare_policy_from_string(std::string_view s) {
    if (s == "exact") return ComparePolicy::exact;
    if (s == "numeric") return ComparePolicy::numeric;
    throw std::invalid_argument("unknown compare policy: " + std::string(s));
}

const char* compare_policy_name(ComparePolicy p) {
    return p == ComparePolicy::exact ? "exact" : "numeric";
}

bool compare_outputs(std::string_view expected, std::string_view actual, ComparePolicy policy) {
    if (policy == ComparePolicy::exact)
        return strip_trailing_ws(expected) == strip_trailing_ws(actual);

    std::vector<std::string> a = whitespace_tokens(expected);
    std::vector<std::string> b = whitespace_tokens(actual);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double xa = 0, xb = 0;
        bool na = parse_number(a[i], xa);
        bool nb = parse_number(b[i], xb);
        if (na && nb) {
            double diff = std::fabs(xa - xb);
            double scale = std::max(std::fabs(xa), std::fabs(xb));
            if (diff > kNumericRelTolerance * scale) return false;
        } else if (a[i] != b[i]) {
            return false;
        }
    }
    return true;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty sample");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ------------------------------------------------------- SubprocessVerifier

namespace {

std::vector<std::string> expand_template(const std::string& tmpl,
                                         const std::map<std::string, std::string>& subs) {
    std::string expanded;
    expanded.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '{') {
            std::size_t close = tmpl.find('}', i);
            if (close != std::string::npos) {
                std::string name = tmpl.substr(i + 1, close - i - 1);
                auto it = subs.find(name);
                if (it != subs.end()) {
                    expanded += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        expanded.push_back(tmpl[i]);
        ++i;
    }
    std::vector<std::string> argv;
    std::istringstream ss(expanded);
    std::string word;
    while (ss >> word) argv.push_back(word);
    if (argv.empty()) throw std::invalid_argument("empty command template");
    return argv;
}

// Scratch directory with unconditional cleanup.
class ScratchDir {
public:
    explicit ScratchDir(const std::filesystem::path& root) {
        static std::atomic<unsigned> counter{0};
        std::filesystem::path base =
            root.empty() ? std::filesystem::temp_directory_path() : root;
        std::filesystem::create_directories(base);
        path_ = base / ("rg-verify-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directory(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::string head_of(const std::string& text, std::size_t limit = 400) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

}  // namespace

SubprocessVerifier::SubprocessVerifier(SubprocessVerifierConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (cfg_.warmups < 0) throw std::invalid_argument("warmups must be >= 0");
}

VerificationReport SubprocessVerifier::verify(const CodePair& pair) {
    VerificationReport report;
    if (pair.test_inputs.empty()) {
        report.detail = "no test inputs";
        return report;
    }
    ScratchDir scratch(cfg_.work_root);

    auto write_unit = [&](const char* name, const std::string& body) {
        std::filesystem::path file = scratch.path() / name;
        std::ofstream out(file, std::ios::binary);
        out << body;
        if (!pair.driver_source.empty()) out << "\n" << pair.driver_source;
        out.close();
        return file;
    };

    std::filesystem::path serial_src = write_unit("serial.cpp", pair.serial_source);
    std::filesystem::path cand_src = write_unit("candidate.cpp", pair.candidate_source);
    std::filesystem::path serial_bin = scratch.path() / "serial.bin";
    std::filesystem::path cand_bin = scratch.path() / "candidate.bin";

    auto compile = [&](const std::string& tmpl, const std::filesystem::path& src,
                       const std::filesystem::path& out_bin, RunResult& rr) {
        RunSpec spec;
        spec.argv = expand_template(tmpl, {{"src", src.string()}, {"out", out_bin.string()}});
        spec.timeout_s = cfg_.compile_timeout_s;
        rr = run_process(spec);
        return !rr.timed_out && !rr.spawn_failed && rr.exit_code == 0;
    };

    RunResult rr;
    if (!compile(cfg_.compile_serial_template, serial_src, serial_bin, rr)) {
        report.detail = rr.spawn_failed ? "compiler missing for serial build"
                        : rr.timed_out  ? "serial compile timed out"
                                        : "serial compile failed: " + head_of(rr.err);
        return report;
    }
    if (!compile(cfg_.compile_candidate_template, cand_src, cand_bin, rr)) {
        report.detail = rr.spawn_failed ? "compiler missing for candidate build"
                        : rr.timed_out  ? "candidate compile timed out"
                                        : "candidate compile failed: " + head_of(rr.err);
        return report;
    }
    report.compiled = true;

    auto run_one = [&](const std::filesystem::path& bin, const std::string& input) {
        RunSpec spec;
        spec.argv = expand_template(cfg_.run_template, {{"bin", bin.string()}});
        spec.stdin_data = input;
        spec.timeout_s = cfg_.run_timeout_s;
        spec.cwd = scratch.path();
        return run_process(spec);
    };

    std::size_t matches = 0;
    std::ostringstream notes;
    for (std::size_t i = 0; i < pair.test_inputs.size(); ++i) {
        const TestInput& test = pair.test_inputs[i];
        RunResult serial_run = run_one(serial_bin, test.payload);
        if (serial_run.timed_out || serial_run.exit_code != 0) {
            report.per_test.push_back(false);
            notes << "input " << i
                  << (serial_run.timed_out ? ": serial run timed out; " : ": serial run failed; ");
            continue;
        }
        RunResult cand_run = run_one(cand_bin, test.payload);
        if (cand_run.timed_out) {
            report.per_test.push_back(false);
            notes << "input " << i << ": candidate timed out; ";
            continue;
        }
        if (cand_run.exit_code != 0) {
            report.per_test.push_back(false);
            notes << "input " << i << ": candidate exited " << cand_run.exit_code << "; ";
            continue;
        }
        bool ok = compare_outputs(serial_run.out, cand_run.out, test.policy);
        if (!ok) notes << "input " << i << ": wrong output; ";
        report.per_test.push_back(ok);
        if (ok) ++matches;
    }
    report.v_test = static_cast<double>(matches) / static_cast<double>(pair.test_inputs.size());
    report.detail = notes.str();

    if (matches == pair.test_inputs.size()) {
        // One timing sample = every input once, summed.
        auto timed_pass = [&](const std::filesystem::path& bin) {
            double total = 0;
            for (const TestInput& test : pair.test_inputs) {
                RunResult run = run_one(bin, test.payload);
                if (run.timed_out || run.exit_code != 0) return -1.0;
                total += run.wall_s;
            }
            return total;
        };
        std::vector<double> serial_samples, cand_samples;
        bool timing_ok = true;
        for (int w = 0; w < cfg_.warmups && timing_ok; ++w) {
            if (timed_pass(serial_bin) < 0 || timed_pass(cand_bin) < 0) timing_ok = false;
        }
        for (int r = 0; r < cfg_.runs && timing_ok; ++r) {
            double s = timed_pass(serial_bin);
            double c = timed_pass(cand_bin);
            if (s < 0 || c < 0) {
                timing_ok = false;
                break;
            }
            serial_samples.push_back(s);
            cand_samples.push_back(c);
        }
        if (timing_ok) {
            report.timings.serial_median_s = median_of(serial_samples);
            report.timings.candidate_median_s = median_of(cand_samples);
            report.timings.warmups = cfg_.warmups;
            report.timings.runs = cfg_.runs;
            report.speedup = report.timings.serial_median_s /
                             std::max(report.timings.candidate_median_s, 1e-12);
        } else {
            report.detail += "timing pass failed; ";
        }
    }
    return report;
}

// ------------------------------------------------------------ OracleVerifier

const OracleEntry& OracleLandscape::lookup(const std::string& key) const {
    auto it = table.find(key);
    return it == table.end() ? fallback : it->second;
}

OracleLandscape OracleLandscape::from_json(std::string_view text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.is_object()) throw std::invalid_argument("landscape root must be an object");
    OracleLandscape ls;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const nlohmann::json& v = it.value();
        if (it.key() == "synthetic_tests") {
            ls.synthetic_tests = v.get<int>();
            continue;
        }
        if (!v.is_object() || !v.contains("v_test") || !v.contains("speedup"))
            throw std::invalid_argument("landscape entry '" + it.key() +
                                        "' must carry v_test and speedup");
        OracleEntry entry;
        entry.v_test = v.at("v_test").get<double>();
        entry.speedup = v.at("speedup").get<double>();
        entry.unsuitable = v.value("unsuitable", false);
        if (entry.v_test < 0.0 || entry.v_test > 1.0)
            throw std::invalid_argument("landscape entry '" + it.key() +
                                        "': v_test must be in [0,1]");
        if (it.key() == "default")
            ls.fallback = entry;
        else
            ls.table[it.key()] = entry;
    }
    return ls;
}

OracleLandscape OracleLandscape::from_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open landscape file: " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

namespace {

VerificationReport report_from_entry(const OracleEntry& entry, int synthetic_tests) {
    VerificationReport report;
    report.compiled = true;
    report.v_test = entry.v_test;
    report.speedup = entry.v_test >= 1.0 ? entry.speedup : 0.0;
    int tests = std::max(1, synthetic_tests);
    int passes = static_cast<int>(std::lround(entry.v_test * tests));
    for (int i = 0; i < tests; ++i) report.per_test.push_back(i < passes);
    report.timings.serial_median_s = 1.0;
    report.timings.candidate_median_s = report.speedup > 0 ? 1.0 / report.speedup : 0.0;
    return report;
}

}  // namespace

OracleVerifier::OracleVerifier(OracleLandscape landscape) : landscape_(std::move(landscape)) {}

VerificationReport OracleVerifier::verify(const CodePair& pair) {
    return report_from_entry(landscape_.lookup(pair.candidate_source),
                             landscape_.synthetic_tests);
}

std::string landscape_key(const std::vector<MethodId>& path) {
    std::string key;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i > 0) key.push_back('>');
        key += path[i].name;
    }
    return key;
}

VerificationReport oracle_verify(const std::vector<MethodId>& path,
                                 const OracleLandscape& landscape) {
    return report_from_entry(landscape.lookup(landscape_key(path)), landscape.synthetic_tests);
}

}  // namespace regraph
