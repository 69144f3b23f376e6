#include <algorithm>
#include <array>
#include <cstdio>

#include "mdca/corpus.hpp"
#include "mdca/random.hpp"

namespace mdca {
namespace {

struct Template {
    std::string_view concept_id;
    Tier tier;
    enum class Site { kLiverSegment, kKidney, kPleura, kNone } site;
    std::array<std::string_view, 2> conclusions;  // "{}" is replaced by the site
    std::string_view findings;                    // "{}" site, "#" size in cm
};

constexpr std::array<Template, 12> kTemplates{{
    {"hcc", Tier::kTop1, Template::Site::kLiverSegment,
     {"{}占位，考虑HCC可能", "{}结节，考虑肝细胞癌"},
     "{}见约#cm团块状异常信号，动脉期明显强化，门脉期廓清，肝胆期呈低信号"},
    {"icc", Tier::kTop1, Template::Site::kLiverSegment,
     {"{}占位，考虑肝内胆管细胞癌", "{}肿块，ICC可能"},
     "{}见约#cm不规则肿块，动脉期边缘强化，延迟期渐进性强化，邻近胆管扩张"},
    {"metastasis", Tier::kTop1, Template::Site::kLiverSegment,
     {"{}多发结节，考虑转移瘤", "{}结节，转移不除外"},
     "{}见多发大小不等结节，最大约#cm，呈环形强化"},
    {"fnh", Tier::kTop2, Template::Site::kLiverSegment,
     {"{}结节，考虑局灶性结节增生", "{}结节，FNH可能"},
     "{}见约#cm结节，动脉期均匀明显强化，中央见瘢痕，肝胆期呈等高信号"},
    {"hemangioma", Tier::kTop2, Template::Site::kLiverSegment,
     {"{}血管瘤", "{}结节，考虑血管瘤"},
     "{}见约#cm病灶，T2WI呈明显高信号，增强扫描边缘结节状强化并向心性填充"},
    {"cirrhosis", Tier::kTop3, Template::Site::kNone,
     {"肝硬化", "肝硬化表现"},
     "肝脏表面凹凸不平，各叶比例失调，肝裂增宽，右叶径线约#cm"},
    {"portal_hypertension", Tier::kTop3, Template::Site::kNone,
     {"门脉高压", "门静脉高压，侧支循环形成"},
     "门静脉主干增宽，内径约#cm，食管胃底静脉迂曲扩张"},
    {"perfusion_anomaly", Tier::kTop4, Template::Site::kLiverSegment,
     {"{}灌注异常", "{}异常灌注"},
     "{}动脉期见约#cm片状异常强化，其余各期未见明确异常信号"},
    {"lymphadenopathy", Tier::kTop4, Template::Site::kNone,
     {"肝门部淋巴结增大", "腹膜后淋巴结肿大"},
     "肝门区及腹膜后见多发结节影，最大短径约#cm"},
    {"biliary_stones", Tier::kTop4, Template::Site::kNone,
     {"胆囊结石", "胆总管结石"},
     "胆囊内见多发结节状短T2信号影，最大约#cm"},
    {"renal_cyst", Tier::kTop5, Template::Site::kKidney,
     {"{}肾囊肿", "{}肾多发囊肿，考虑肾囊肿"},
     "{}见类圆形长T1长T2信号，增强未见强化，直径约#cm"},
    {"pleural_effusion", Tier::kTop5, Template::Site::kPleura,
     {"{}胸腔积液", "{}少量胸腔积液"},
     "{}见弧形液体信号影，最大深度约#cm"},
}};

constexpr std::array<std::string_view, 10> kSegments{"I", "II", "III", "IV", "IVa",
                                                     "IVb", "V", "VI", "VII", "VIII"};
constexpr std::array<std::string_view, 3> kKidneys{"左", "右", "双"};
constexpr std::array<std::string_view, 3> kPleura{"左侧", "右侧", "双侧"};

std::string fill(std::string_view pattern, std::string_view site, std::string_view size) {
    std::string out;
    for (char c : pattern) {
        if (c == '#') {
            out += size;
        } else {
            out.push_back(c);
        }
    }
    if (auto pos = out.find("{}"); pos != std::string::npos) out.replace(pos, 2, site);
    return out;
}

std::string site_for(const Template& t, SeededRng& rng) {
    switch (t.site) {
        case Template::Site::kLiverSegment:
            return "肝" + std::string(kSegments[rng.below(kSegments.size())]) + "段";
        case Template::Site::kKidney:
            // side only; templates append the organ
            return std::string(kKidneys[rng.below(kKidneys.size())]);
        case Template::Site::kPleura:
            return std::string(kPleura[rng.below(kPleura.size())]);
        case Template::Site::kNone:
            return {};
    }
    return {};
}

std::string size_text(SeededRng& rng) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", 0.5 + static_cast<double>(rng.below(96)) / 10.0);
    return buf;
}

}  // namespace

std::vector<ReportRecord> synthesize_reports(std::size_t n, std::uint64_t seed, std::string_view id_prefix) {
    std::vector<ReportRecord> out;
    out.reserve(n);
    // Item counts 1..5, skewed toward 2-3 as in typical liver MRI conclusions.
    static constexpr std::array<std::size_t, 10> kCounts{1, 2, 2, 2, 3, 3, 3, 4, 4, 5};
    for (std::size_t r = 0; r < n; ++r) {
        SeededRng rng(derive_seed(seed, std::to_string(r)));
        const std::size_t k = kCounts[rng.below(kCounts.size())];
        std::vector<std::size_t> picks(kTemplates.size());
        for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
        rng.shuffle(picks);
        picks.resize(k);
        std::stable_sort(picks.begin(), picks.end(), [](std::size_t a, std::size_t b) {
            return kTemplates[a].tier < kTemplates[b].tier;
        });

        std::vector<std::string> lines;
        std::string findings = "肝脏MRI平扫+Gd-EOB-DTPA增强扫描（序号" + std::to_string(r + 1) + "）：";
        for (std::size_t p : picks) {
            const Template& t = kTemplates[p];
            std::string site = site_for(t, rng);
            std::string site_findings = site;
            if (t.site == Template::Site::kKidney) site_findings += "肾";
            if (t.site == Template::Site::kPleura) site_findings += "胸腔";
            lines.push_back(fill(t.conclusions[rng.below(2)], site, {}) + "。");
            findings += fill(t.findings, site_findings, size_text(rng)) + "；";
        }
        std::string conclusion;
        const bool one_line = rng.below(2) == 0;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (i > 0) conclusion += one_line ? "" : "\n";
            conclusion += std::to_string(i + 1) + ". " + lines[i];
        }

        char id[64];
        std::snprintf(id, sizeof id, "%.*s-%05zu", static_cast<int>(id_prefix.size()), id_prefix.data(), r + 1);
        ReportRecord rec;
        rec.id = id;
        rec.findings = std::move(findings);
        rec.ground_truth_conclusion = std::move(conclusion);
        rec.meta["source"] = "synthetic";
        rec.meta["seed"] = std::to_string(seed);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace mdca
