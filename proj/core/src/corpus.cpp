#include "mdca/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <unordered_set>

#include "mdca/hashing.hpp"
#include "mdca/random.hpp"
#include "mdca/segmenter.hpp"
#include "mdca/text.hpp"

namespace mdca {
namespace {

struct RawRow {
    std::size_t line;
    Json object;
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool valid_utf8(std::string_view s) {
    return text::encode_utf8(text::decode_utf8(s)) == s;
}

// RFC 4180 reader; returns rows with the 1-based line each row starts on.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view data) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t row_line = 1;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.size() == 1 && row[0].empty();
        if (!blank) rows.emplace_back(row_line, std::move(row));
        row.clear();
    };
    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') ++i;
            end_row();
            ++line;
            row_line = line;
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) throw Error(ErrorCode::kMalformedRecord, "unterminated quoted CSV field");
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<RawRow> read_jsonl_rows(const std::filesystem::path& path, std::vector<RecordIssue>& issues) {
    std::vector<RawRow> rows;
    for_each_jsonl_line(path, [&](std::size_t line, std::string_view text) {
        if (line == 1 && text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
        try {
            rows.push_back({line, Json::parse(text)});
        } catch (const Json::parse_error& e) {
            issues.push_back({line, ErrorCode::kMalformedRecord, std::string("invalid JSON: ") + e.what()});
        }
    });
    return rows;
}

std::vector<RawRow> read_csv_rows(const std::filesystem::path& path, std::vector<RecordIssue>& issues) {
    std::string data = read_text_file(path);
    if (data.starts_with("\xEF\xBB\xBF")) data.erase(0, 3);
    const auto table = parse_csv(data);
    std::vector<RawRow> rows;
    if (table.empty()) return rows;
    const auto& header = table.front().second;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& [line, cells] = table[r];
        if (cells.size() != header.size()) {
            issues.push_back({line, ErrorCode::kMalformedRecord,
                              "expected " + std::to_string(header.size()) + " columns, got " +
                                  std::to_string(cells.size())});
            continue;
        }
        Json obj = Json::object();
        Json meta = Json::object();
        bool ok = true;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (!valid_utf8(cells[c])) {
                issues.push_back({line, ErrorCode::kMalformedRecord, "invalid UTF-8"});
                ok = false;
                break;
            }
            const std::string& name = header[c];
            if (name == "id" || name == "findings" || name == "conclusion") {
                obj[name] = cells[c];
            } else if (name == "meta") {
                if (text::trim(cells[c]).empty()) continue;
                try {
                    for (auto& [k, v] : Json::parse(cells[c]).items()) meta[k] = v;
                } catch (const Json::exception& e) {
                    issues.push_back({line, ErrorCode::kMalformedRecord, std::string("meta: ") + e.what()});
                    ok = false;
                    break;
                }
            } else {
                meta[name] = cells[c];
            }
        }
        if (!ok) continue;
        obj["meta"] = std::move(meta);
        rows.push_back({line, std::move(obj)});
    }
    return rows;
}

// Converts one parsed row into a record, or explains why not.
std::optional<ReportRecord> to_record(const RawRow& row, const LoadOptions& options,
                                      const Lexicon& lexicon, std::vector<RecordIssue>& issues) {
    auto fail = [&](std::string reason) {
        issues.push_back({row.line, ErrorCode::kMalformedRecord, std::move(reason)});
        return std::nullopt;
    };
    const Json& obj = row.object;
    if (!obj.is_object()) return fail("record is not a JSON object");
    ReportRecord rec;
    for (const char* field : {"id", "findings", "conclusion"}) {
        if (!obj.contains(field) || !obj[field].is_string()) {
            return fail(std::string("missing string field '") + field + "'");
        }
    }
    rec.id = obj["id"].get<std::string>();
    rec.findings = obj["findings"].get<std::string>();
    rec.ground_truth_conclusion = obj["conclusion"].get<std::string>();
    if (text::trim(rec.id).empty()) return fail("empty id");
    if (text::trim(rec.findings).empty()) return fail("empty findings");
    if (text::trim(rec.ground_truth_conclusion).empty()) return fail("empty conclusion");
    if (obj.contains("meta") && !obj["meta"].is_null()) {
        if (!obj["meta"].is_object()) return fail("meta is not an object");
        for (const auto& [k, v] : obj["meta"].items()) {
            if (v.is_string()) {
                rec.meta[k] = v.get<std::string>();
            } else if (v.is_primitive() && !v.is_null()) {
                rec.meta[k] = v.dump();
            } else {
                return fail("meta value for '" + k + "' is not a scalar");
            }
        }
    }
    for (const auto& [k, v] : rec.meta) {
        const auto key = lower(k);
        for (const auto& denied : options.deny_list) {
            if (key == lower(denied)) {
                return fail("meta key '" + k + "' is on the de-identification deny-list");
            }
        }
    }
    try {
        segment_conclusion(rec.ground_truth_conclusion, lexicon);
    } catch (const Error& e) {
        return fail(std::string("conclusion does not segment: ") + e.what());
    }
    return rec;
}

bool truthy(std::string_view v) {
    const auto s = lower(text::trim(v));
    return s == "true" || s == "1" || s == "yes" || s == "y";
}

}  // namespace

const ReportRecord* Corpus::find(std::string_view id) const {
    for (const auto& r : records) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "jsonl") return CorpusFormat::kJsonl;
    if (name == "csv") return CorpusFormat::kCsv;
    throw Error(ErrorCode::kInvalidArgument, "corpus format must be jsonl or csv, got '" + std::string(name) + "'");
}

const std::vector<std::string>& default_deny_list() {
    static const std::vector<std::string> kDeny{
        "name", "patient_name", "national_id", "id_card", "id_number", "phone",
        "telephone", "address", "mrn", "medical_record_number", "birth_date", "date_of_birth"};
    return kDeny;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const LoadOptions& options) {
    const Lexicon& lexicon = options.lexicon ? *options.lexicon : default_lexicon();
    std::vector<RecordIssue> issues;
    std::vector<RawRow> rows;
    try {
        rows = format == CorpusFormat::kJsonl ? read_jsonl_rows(path, issues) : read_csv_rows(path, issues);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::kIo) throw;
        issues.push_back({0, ErrorCode::kMalformedRecord, e.what()});
    }
    std::vector<ReportRecord> records;
    std::unordered_set<std::string> seen;
    for (const auto& row : rows) {
        auto rec = to_record(row, options, lexicon, issues);
        if (!rec) continue;
        if (!seen.insert(rec->id).second) {
            issues.push_back({row.line, ErrorCode::kDuplicateId, rec->id});
            continue;
        }
        records.push_back(std::move(*rec));
    }
    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const RecordIssue& a, const RecordIssue& b) { return a.line < b.line; });
        std::string message = path.string() + ": " + std::to_string(issues.size()) + " invalid record(s)";
        for (const auto& issue : issues) {
            message += "\n  line " + std::to_string(issue.line) + ": " +
                       std::string(to_string(issue.code)) + " " + issue.reason;
        }
        const ErrorCode code = issues.front().code;
        throw CorpusLoadError(code, message, std::move(issues));
    }
    if (records.empty()) throw Error(ErrorCode::kEmptyCorpus, path.string());
    return make_corpus(std::move(records), path.string());
}

Corpus make_corpus(std::vector<ReportRecord> records, std::string source) {
    Corpus corpus;
    corpus.checksum = corpus_checksum(records);
    corpus.records = std::move(records);
    corpus.source = std::move(source);
    return corpus;
}

Json to_json(const ReportRecord& record) {
    Json meta = Json::object();
    for (const auto& [k, v] : record.meta) meta[k] = v;
    return {{"id", record.id},
            {"findings", record.findings},
            {"conclusion", record.ground_truth_conclusion},
            {"meta", std::move(meta)}};
}

std::string to_jsonl(const std::vector<ReportRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += dump_line(to_json(r));
        out += '\n';
    }
    return out;
}

std::string corpus_checksum(const std::vector<ReportRecord>& records) {
    return sha256_hex(to_jsonl(records));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    write_text_file(path, to_jsonl(corpus.records));
}

std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed) {
    if (n > size) {
        throw Error(ErrorCode::kSampleTooLarge,
                    "requested " + std::to_string(n) + ", available " + std::to_string(size));
    }
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SeededRng rng(seed);
    rng.shuffle(idx);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Corpus sample_corpus(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    std::vector<ReportRecord> picked;
    picked.reserve(n);
    for (std::size_t i : sample_indices(corpus.records.size(), n, seed)) picked.push_back(corpus.records[i]);
    return make_corpus(std::move(picked), corpus.source);
}

const std::vector<ExclusionFlag>& exclusion_flags() {
    static const std::vector<ExclusionFlag> kFlags{
        {"hepatic_surgery_history", "history of hepatic surgery"},
        {"systemic_antitumor_therapy", "any systemic anti-tumor therapy"},
        {"extrahepatic_malignancy_history", "history of extrahepatic primary malignancy"},
        {"no_hepatic_lesion", "no benign or malignant hepatic lesion"},
        {"poor_image_quality", "image quality insufficient for assessment"},
    };
    return kFlags;
}

std::vector<ExclusionViolation> check_exclusions(const Corpus& corpus) {
    std::vector<ExclusionViolation> out;
    for (const auto& rec : corpus.records) {
        ExclusionViolation v{rec.id, {}};
        for (const auto& flag : exclusion_flags()) {
            auto it = rec.meta.find(flag.key);
            if (it != rec.meta.end() && truthy(it->second)) v.flags.push_back(flag.key);
        }
        if (!v.flags.empty()) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace mdca
