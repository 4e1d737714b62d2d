#include "regraph/curate.hpp"

#include <algorithm>
#include <cctype>

#include "regraph/parse.hpp"

namespace regraph {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool has_quoted_include(const std::string& source) {
    size_t pos = 0;
    while (pos < source.size()) {
        size_t eol = source.find('\n', pos);
        if (eol == std::string::npos) eol = source.size();
        size_t i = pos;
        auto skip_ws = [&] {
            while (i < eol && (source[i] == ' ' || source[i] == '\t')) ++i;
        };
        skip_ws();
        if (i < eol && source[i] == '#') {
            ++i;
            skip_ws();
            if (source.compare(i, 7, "include") == 0) {
                i += 7;
                skip_ws();
                if (i < eol && source[i] == '"') return true;
            }
        }
        pos = eol + 1;
    }
    return false;
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

const char* curate_status_name(CurateStatus s) {
    switch (s) {
        case CurateStatus::accepted: return "accepted";
        case CurateStatus::rejected_local_header: return "rejected_local_header";
        case CurateStatus::rejected_line_count: return "rejected_line_count";
        case CurateStatus::rejected_third_party: return "rejected_third_party";
        case CurateStatus::rejected_extraction: return "rejected_extraction";
        case CurateStatus::rejected_verification: return "rejected_verification";
    }
    return "unknown";
}

int function_body_line_count(const std::string& source) {
    enum class Mode { normal, line_comment, block_comment, string, char_lit, raw_string };
    Mode mode = Mode::normal;

    int body_depth = 0;   // nesting of braces classified as function bodies
    int plain_depth = 0;  // braces opened outside any body (namespaces, classes)
    bool paren_since_stmt = false;
    bool line_has_body_content = false;
    int count = 0;
    std::string raw_delim;
    size_t i = 0;
    const size_t n = source.size();

    auto mark = [&](char c) {
        if (body_depth > 0 && !std::isspace(static_cast<unsigned char>(c)))
            line_has_body_content = true;
    };

    while (i < n) {
        char c = source[i];
        if (c == '\n') {
            if (mode == Mode::line_comment) mode = Mode::normal;
            if (line_has_body_content) ++count;
            line_has_body_content = false;
            ++i;
            continue;
        }
        switch (mode) {
            case Mode::line_comment:
                mark(c);
                ++i;
                break;
            case Mode::block_comment:
                mark(c);
                if (c == '*' && i + 1 < n && source[i + 1] == '/') {
                    mark('/');
                    i += 2;
                    mode = Mode::normal;
                } else {
                    ++i;
                }
                break;
            case Mode::string:
                mark(c);
                if (c == '\\' && i + 1 < n) {
                    mark(source[i + 1]);
                    i += 2;
                } else {
                    if (c == '"') mode = Mode::normal;
                    ++i;
                }
                break;
            case Mode::char_lit:
                mark(c);
                if (c == '\\' && i + 1 < n) {
                    mark(source[i + 1]);
                    i += 2;
                } else {
                    if (c == '\'') mode = Mode::normal;
                    ++i;
                }
                break;
            case Mode::raw_string: {
                mark(c);
                const std::string close = ")" + raw_delim + "\"";
                if (c == ')' && source.compare(i, close.size(), close) == 0) {
                    for (size_t k = 1; k < close.size(); ++k) mark(source[i + k]);
                    i += close.size();
                    mode = Mode::normal;
                } else {
                    ++i;
                }
                break;
            }
            case Mode::normal:
                if (c == '/' && i + 1 < n && source[i + 1] == '/') {
                    mark(c);
                    mark('/');
                    i += 2;
                    mode = Mode::line_comment;
                } else if (c == '/' && i + 1 < n && source[i + 1] == '*') {
                    mark(c);
                    mark('*');
                    i += 2;
                    mode = Mode::block_comment;
                } else if (c == '"') {
                    // R"delim( opens a raw string; only the unprefixed form is
                    // recognized, which covers kernels in practice.
                    if (i >= 1 && source[i - 1] == 'R' && (i == 1 || !is_ident_char(source[i - 2]))) {
                        size_t open = source.find('(', i + 1);
                        if (open != std::string::npos && open - i - 1 <= 16) {
                            raw_delim = source.substr(i + 1, open - i - 1);
                            for (size_t k = i; k <= open; ++k) mark(source[k]);
                            i = open + 1;
                            mode = Mode::raw_string;
                            break;
                        }
                    }
                    mark(c);
                    ++i;
                    mode = Mode::string;
                } else if (c == '\'') {
                    mark(c);
                    ++i;
                    // Digit separators (1'000) are not character literals.
                    if (!(i >= 2 && is_ident_char(source[i - 2]))) mode = Mode::char_lit;
                } else if (c == '{') {
                    // A brace opens a function body when it closes off a
                    // parameter list (possibly through const/noexcept/-> T) or
                    // sits inside one; everything else is a scope or aggregate.
                    mark(c);
                    if (body_depth > 0) {
                        ++body_depth;
                        line_has_body_content = true;
                    } else if (paren_since_stmt) {
                        ++body_depth;
                    } else {
                        ++plain_depth;
                    }
                    paren_since_stmt = false;
                    ++i;
                } else if (c == '}') {
                    if (body_depth > 0)
                        --body_depth;
                    else if (plain_depth > 0)
                        --plain_depth;
                    mark(c);
                    paren_since_stmt = false;
                    ++i;
                } else {
                    if (c == ')') paren_since_stmt = true;
                    if (c == ';') paren_since_stmt = false;
                    mark(c);
                    ++i;
                }
                break;
        }
    }
    if (line_has_body_content) ++count;
    return count;
}

CurateStatus curate_filter(const std::string& source, const CurateRules& rules) {
    if (has_quoted_include(source)) return CurateStatus::rejected_local_header;
    const int lines = function_body_line_count(source);
    if (lines < rules.min_lines || lines > rules.max_lines)
        return CurateStatus::rejected_line_count;
    const std::string lowered = to_lower(source);
    for (const auto& entry : rules.denylist) {
        if (lowered.find(to_lower(entry)) != std::string::npos)
            return CurateStatus::rejected_third_party;
    }
    return CurateStatus::accepted;
}

namespace {

std::string ask(Gateway& gateway, PromptKind kind, const Bindings& bindings,
                const RequestDefaults& defaults) {
    return gateway.complete(render(prompt_template(kind), bindings, defaults));
}

}  // namespace

CurationReport curate_pipeline(const std::vector<CurationInput>& inputs, Gateway& gateway,
                               Verifier& verifier, const CurateRules& rules,
                               const RequestDefaults& defaults) {
    CurationReport report;
    report.items.reserve(inputs.size());
    for (const auto& input : inputs) {
        CurationItem item;
        item.id = input.id;
        const CurateStatus filtered = curate_filter(input.content, rules);
        if (filtered != CurateStatus::accepted) {
            item.status = filtered;
            item.reason = curate_status_name(filtered);
            report.items.push_back(std::move(item));
            continue;
        }
        try {
            const auto kernels = parse_kernel_extraction(
                ask(gateway, PromptKind::kernel_extract, {{"file", input.content}}, defaults));
            if (kernels.empty()) {
                item.status = CurateStatus::rejected_extraction;
                item.reason = "no kernels found in file";
                report.items.push_back(std::move(item));
                continue;
            }
            // One task per file: the first extracted kernel.
            std::string kernel = kernels.front().content;

            const auto dep = parse_dependency(
                ask(gateway, PromptKind::dependency, {{"kernel", kernel}}, defaults));
            if (!dep.success) {
                item.status = CurateStatus::rejected_extraction;
                item.reason = dep.reason.empty() ? "dependency completion declined" : dep.reason;
                report.items.push_back(std::move(item));
                continue;
            }
            kernel = *dep.rewrite;

            const auto gen = parse_serial_gen(
                ask(gateway, PromptKind::serial_gen, {{"kernel", kernel}}, defaults));

            CodePair pair;
            pair.serial_source = gen.serial;
            pair.candidate_source = kernel;
            pair.driver_source = gen.driver;
            pair.test_inputs.reserve(gen.test_inputs.size());
            for (const auto& payload : gen.test_inputs)
                pair.test_inputs.push_back({payload, ComparePolicy::numeric});

            const VerificationReport checked = verifier.verify(pair);
            if (!checked.compiled || checked.v_test < 1.0 || checked.speedup < 1.0) {
                item.status = CurateStatus::rejected_verification;
                item.reason = checked.compiled
                                  ? "v_test=" + std::to_string(checked.v_test) +
                                        " speedup=" + std::to_string(checked.speedup)
                                  : "did not compile: " + checked.detail;
                report.items.push_back(std::move(item));
                continue;
            }

            // The dataset task is the runnable serial side: reference plus
            // driver, with the verified inputs. The kernel was only the gate.
            TaskRecord record;
            record.id = input.id;
            record.cpp_source = gen.serial;
            if (!gen.driver.empty()) {
                if (!record.cpp_source.empty() && record.cpp_source.back() != '\n')
                    record.cpp_source += '\n';
                record.cpp_source += gen.driver;
            }
            record.tests = pair.test_inputs;
            report.accepted.push_back(std::move(record));
            item.status = CurateStatus::accepted;
        } catch (const ParseError& e) {
            item.status = CurateStatus::rejected_extraction;
            item.reason = e.what();
        } catch (const GatewayError& e) {
            item.status = CurateStatus::rejected_extraction;
            item.reason = e.what();
            ++report.errored;
        }
        report.items.push_back(std::move(item));
    }
    return report;
}

}  // namespace regraph
