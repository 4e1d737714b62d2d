#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regraph/canon.hpp"

namespace regraph {

enum class ComparePolicy { exact, numeric };

ComparePolicy compare_policy_from_string(std::string_view s);
const char* compare_policy_name(ComparePolicy p);

// exact: byte equality after stripping trailing whitespace per line and
// trailing blank lines. numeric: token-by-token, numerals compared at 1e-6
// relative tolerance, everything else exactly.
bool compare_outputs(std::string_view expected, std::string_view actual, ComparePolicy policy);

inline constexpr double kNumericRelTolerance = 1e-6;

struct TestInput {
    std::string payload;  // fed to the program on stdin
    ComparePolicy policy = ComparePolicy::exact;

    bool operator==(const TestInput&) const = default;
};

struct CodePair {
    std::string serial_source;     // trusted reference implementation
    std::string candidate_source;  // implementation under test
    std::string driver_source;     // appended to both when non-empty
    std::vector<TestInput> test_inputs;
};

struct Timings {
    double serial_median_s = 0.0;
    double candidate_median_s = 0.0;
    int warmups = 0;
    int runs = 0;
};

struct VerificationReport {
    bool compiled = false;
    double v_test = 0.0;  // fraction of test inputs with matching output
    double speedup = 0.0; // serial median over candidate median; 0 until v_test == 1
    Timings timings;
    std::vector<bool> per_test;  // one entry per test input
    std::string detail;          // human diagnostics: compiler output head, timeout notes
};

class Verifier {
public:
    virtual ~Verifier() = default;
    virtual VerificationReport verify(const CodePair& pair) = 0;
};

struct SubprocessVerifierConfig {
    // {src} and {out} expand in compile templates, {bin} in the run template.
    std::string compile_serial_template = "c++ -O2 -o {out} {src}";
    std::string compile_candidate_template = "c++ -O2 -o {out} {src}";
    std::string run_template = "{bin}";
    double compile_timeout_s = 30.0;
    double run_timeout_s = 60.0;
    int warmups = 2;
    int runs = 5;
    std::filesystem::path work_root;  // empty = system temp dir
};

// Compiles both sides, replays every test input through both binaries, and
// times them when all outputs match. All artifacts live in a per-call scratch
// directory that is removed on every exit path.
class SubprocessVerifier : public Verifier {
public:
    explicit SubprocessVerifier(SubprocessVerifierConfig cfg);
    VerificationReport verify(const CodePair& pair) override;

private:
    SubprocessVerifierConfig cfg_;
};

// Deterministic stand-in for tests and GPU-free runs: scores a candidate by
// looking its text up in a fixed table.
struct OracleEntry {
    double v_test = 1.0;
    double speedup = 1.0;
    bool unsuitable = false;  // consulted by the synthetic optimizer, not the verifier

    bool operator==(const OracleEntry&) const = default;
};

struct OracleLandscape {
    std::map<std::string, OracleEntry> table;
    OracleEntry fallback;      // the "default" entry
    int synthetic_tests = 4;   // granularity of the synthesized per-test vector

    const OracleEntry& lookup(const std::string& key) const;

    static OracleLandscape from_json(std::string_view text);
    static OracleLandscape from_file(const std::filesystem::path& file);
};

class OracleVerifier : public Verifier {
public:
    explicit OracleVerifier(OracleLandscape landscape);
    VerificationReport verify(const CodePair& pair) override;

    const OracleLandscape& landscape() const { return landscape_; }

private:
    OracleLandscape landscape_;
};

// Joins a method sequence into the landscape's path key ("a>b>c").
std::string landscape_key(const std::vector<MethodId>& path);

// Scores a whole method sequence against a landscape.
VerificationReport oracle_verify(const std::vector<MethodId>& path,
                                 const OracleLandscape& landscape);

// Exposed for the timing-protocol unit tests.
double median_of(std::vector<double> values);

}  // namespace regraph
