#include "mdca/promptkit.hpp"

#include "mdca/corpus.hpp"
#include "mdca/error.hpp"
#include "mdca/text.hpp"

namespace mdca {
namespace {

constexpr std::array<std::string_view, 6> kKindNames{"role",      "task",      "taxonomy",
                                                     "verification", "structure", "principles"};

constexpr std::array<std::string_view, 6> kZhHeaders{
    "【角色设定】", "【基本任务要求】", "【分级诊断体系（TOP）】",
    "【强制核查项】", "【报告结构规范】", "【影像诊断原则】"};

constexpr std::array<std::string_view, 6> kEnHeaders{
    "## Role", "## Core Task", "## Tiered Diagnostic Taxonomy (TOP)",
    "## Mandatory Verification", "## Report Structure", "## Imaging Diagnostic Principles"};

constexpr std::string_view kSectionDelimiter = "\n\n";

struct BuiltinText {
    ComponentKind kind;
    std::string_view zh;
    std::string_view en;
};

constexpr std::array<BuiltinText, 6> kBuiltinTexts{{
    {ComponentKind::kRole,
     "你是一名从事肝脏MRI诊断工作30年的腹部影像科医师，擅长肝脏良恶性占位的鉴别诊断，"
     "尤其是肝细胞癌（HCC）、肝内胆管细胞癌（ICC）、局灶性结节增生（FNH）与血管瘤。"
     "请根据用户提供的检查所见书写诊断结论。",
     "You are an abdominal radiologist with 30 years of liver MRI reading experience, "
     "focused on separating benign from malignant liver lesions, particularly HCC, ICC, FNH "
     "and hemangioma. Write the diagnostic conclusion for the findings the user provides."},
    {ComponentKind::kTask,
     "首先识别并报告恶性肿瘤；不得给出影像依据不足的推测性结论；严格依据影像诊断标准；"
     "只输出结论部分，不复述检查所见。",
     "Report malignant tumors first. Do not state conclusions the images do not support. "
     "Follow established diagnostic criteria. Output only the conclusion section and do not "
     "restate the findings."},
    {ComponentKind::kTaxonomy,
     "按临床优先级分级：\n"
     "TOP1：肝细胞癌（HCC）、肝内胆管细胞癌（ICC）、转移瘤等恶性病变；\n"
     "TOP2：局灶性结节增生（FNH）、血管瘤等良性占位；\n"
     "TOP3：肝硬化、门脉高压等弥漫性改变；\n"
     "TOP4：淋巴结增大、胆系结石、灌注异常等伴随征象；\n"
     "TOP5：肾囊肿、胸腔积液等肝外偶发所见。",
     "Rank diagnoses by clinical priority:\n"
     "TOP1: HCC, ICC, metastases and other malignancies;\n"
     "TOP2: FNH, hemangioma and other benign masses;\n"
     "TOP3: cirrhosis, portal hypertension and other diffuse changes;\n"
     "TOP4: lymphadenopathy, biliary stones, perfusion anomalies;\n"
     "TOP5: renal cysts, pleural effusion and other extrahepatic incidental findings."},
    {ComponentKind::kVerification,
     "逐项确认以下内容后再下结论：☑ 肝癌 ☑ 转移灶 ☑ 灌注异常 ☑ 肝硬化 ☑ 淋巴结 ☑ 肾囊肿 "
     "☑ 胆系结石 ☑ 胸腔积液。",
     "Confirm each item before concluding: HCC, metastases, perfusion anomalies, cirrhosis, "
     "lymph nodes, renal cysts, biliary stones, pleural effusion."},
    {ComponentKind::kStructure,
     "每条诊断单独一行，写作“解剖部位+病变性质”，以“1. 2. 3.”编号，按TOP等级由高到低排列。",
     "One diagnosis per line, written as anatomical location + lesion type, numbered "
     "\"1. 2. 3.\" and ordered from the highest TOP tier down."},
    {ComponentKind::kPrinciples,
     "HCC：动脉期高强化，门脉期或延迟期廓清，肝胆期低信号；"
     "ICC：边缘强化伴延迟期渐进性强化，可伴邻近胆管扩张；"
     "转移瘤：多发，环形强化；"
     "FNH：动脉期均匀明显强化，中央瘢痕，肝胆期等或高信号；"
     "血管瘤：T2WI明显高信号，边缘结节状强化并向心性填充。",
     "HCC: arterial phase hyperenhancement, portal venous or delayed washout, hepatobiliary "
     "phase hypointensity. ICC: rim enhancement with progressive delayed enhancement, possibly "
     "with upstream bile duct dilatation. Metastases: multiple, ring enhancement. FNH: "
     "homogeneous arterial enhancement, central scar, iso- or hyperintense in the hepatobiliary "
     "phase. Hemangioma: marked T2 hyperintensity, peripheral nodular enhancement with "
     "centripetal fill-in."},
}};

std::string render_example(std::size_t index, const ExampleReport& ex, Language lang) {
    const std::string n = std::to_string(index + 1);
    if (lang == Language::kZh) {
        return "【样例报告 " + n + "】\n检查所见：" + ex.findings + "\n结论：" + ex.conclusion;
    }
    return "### Example report " + n + "\nFindings: " + ex.findings + "\nDiagnosis: " + ex.conclusion;
}

PromptConfig row(std::string id, std::array<bool, 6> flags, std::size_t n) {
    return PromptConfig{std::move(id), flags, n};
}

}  // namespace

std::string_view to_string(ComponentKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ComponentKind parse_component_kind(std::string_view name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) return static_cast<ComponentKind>(i);
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown prompt component '" + std::string(name) + "'");
}

std::string_view to_string(Language lang) { return lang == Language::kZh ? "zh" : "en"; }

Language parse_language(std::string_view name) {
    if (name == "zh") return Language::kZh;
    if (name == "en") return Language::kEn;
    throw Error(ErrorCode::kInvalidArgument, "language must be zh or en, got '" + std::string(name) + "'");
}

void ComponentRegistry::set(ComponentKind kind, Language lang, std::string text) {
    if (text::trim(text).empty()) {
        throw Error(ErrorCode::kInvalidArgument, "empty text for component " + std::string(to_string(kind)));
    }
    texts_[{kind, lang}] = std::move(text);
}

const std::string* ComponentRegistry::find(ComponentKind kind, Language lang) const {
    auto it = texts_.find({kind, lang});
    return it == texts_.end() ? nullptr : &it->second;
}

void ComponentRegistry::merge_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("components") || !doc["components"].is_object()) {
        throw Error(ErrorCode::kParse, "registry document needs a 'components' object");
    }
    const Language lang = parse_language(doc.value("language", std::string("zh")));
    for (const auto& [kind, text] : doc["components"].items()) {
        if (!text.is_string()) throw Error(ErrorCode::kParse, "component '" + kind + "' is not a string");
        set(parse_component_kind(kind), lang, text.get<std::string>());
    }
}

ComponentRegistry ComponentRegistry::builtin() {
    ComponentRegistry r;
    for (const auto& t : kBuiltinTexts) {
        r.set(t.kind, Language::kZh, std::string(t.zh));
        r.set(t.kind, Language::kEn, std::string(t.en));
    }
    return r;
}

ComponentRegistry ComponentRegistry::load(const std::filesystem::path& path) {
    ComponentRegistry r;
    const Json doc = load_structured_file(path);
    if (doc.is_array()) {
        for (const auto& d : doc) r.merge_json(d);
    } else {
        r.merge_json(doc);
    }
    return r;
}

const std::vector<PromptConfig>& builtin_configs() {
    constexpr bool Y = true;
    constexpr bool N = false;
    //                               role task taxo verif struct princ  examples
    static const std::vector<PromptConfig> kConfigs{
        row("P0", {Y, N, N, N, N, N}, 0),
        row("P1", {Y, Y, N, N, N, N}, 0),
        row("P2", {Y, Y, N, N, N, N}, 3),
        row("P3", {Y, Y, Y, N, Y, N}, 3),
        row("P4", {Y, Y, Y, Y, Y, Y}, 3),
        row("P5", {Y, Y, N, N, N, N}, 10),
        row("P6", {Y, Y, Y, Y, Y, Y}, 10),
        row("P7", {Y, Y, Y, Y, Y, Y}, 0),
        row("P8", {Y, Y, Y, Y, Y, Y}, 5),
        row("P9", {Y, Y, Y, Y, Y, Y}, 15),
        row("P10", {Y, Y, Y, Y, Y, Y}, 20),
        row("P11", {Y, Y, Y, Y, Y, Y}, 25),
    };
    return kConfigs;
}

const PromptConfig& find_config(std::string_view id) {
    for (const auto& c : builtin_configs()) {
        if (c.id == id) return c;
    }
    throw Error(ErrorCode::kUnknownConfig, std::string(id));
}

ComposedPrompt compose(const PromptConfig& config, const ComponentRegistry& registry,
                       const std::vector<ExampleReport>& pool, Language language) {
    if (!config.has(ComponentKind::kRole)) {
        throw Error(ErrorCode::kInvalidArgument, "config " + config.id + " must include the role component");
    }
    if (pool.size() < config.n_examples) {
        throw Error(ErrorCode::kInsufficientExamples,
                    "need " + std::to_string(config.n_examples) + ", have " + std::to_string(pool.size()));
    }
    const auto& headers = language == Language::kZh ? kZhHeaders : kEnHeaders;
    ComposedPrompt out;
    out.config_id = config.id;
    for (ComponentKind kind : kComponentOrder) {
        if (!config.has(kind)) continue;
        const std::string* body = registry.find(kind, language);
        if (body == nullptr) {
            throw Error(ErrorCode::kMissingComponent,
                        std::string(to_string(kind)) + " (" + std::string(to_string(language)) + ")");
        }
        out.sections.push_back({kind, std::string(headers[static_cast<std::size_t>(kind)]) + "\n" + *body});
    }
    for (std::size_t i = 0; i < config.n_examples; ++i) {
        out.sections.push_back({i, render_example(i, pool[i], language)});
    }
    for (std::size_t i = 0; i < out.sections.size(); ++i) {
        if (i > 0) out.system_text += kSectionDelimiter;
        out.system_text += out.sections[i].text;
    }
    out.char_length = text::utf8_length(out.system_text);
    return out;
}

std::vector<ExampleReport> load_example_pool(const std::filesystem::path& path) {
    std::vector<ExampleReport> pool;
    for_each_jsonl_line(path, [&](std::size_t line, std::string_view text) {
        try {
            const auto doc = Json::parse(text);
            ExampleReport ex{doc.at("findings").get<std::string>(), doc.at("conclusion").get<std::string>()};
            if (text::trim(ex.findings).empty() || text::trim(ex.conclusion).empty()) {
                throw Error(ErrorCode::kMalformedRecord, "empty findings or conclusion");
            }
            pool.push_back(std::move(ex));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::kMalformedRecord,
                        path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return pool;
}

std::vector<ExampleReport> builtin_example_pool(Language language) {
    std::vector<ExampleReport> pool;
    if (language == Language::kZh) {
        pool.push_back({"肝IVb段见团块状占位，动脉期环形强化，延迟期洗脱，肝胆期低信号，肝门部淋巴结增大。",
                        "1. 肝IVb段占位，考虑HCC可能。2. 肝硬化伴门脉高压。3. 肝门部淋巴结增大，转移不除外。"});
    } else {
        pool.push_back({"Liver shows irregular margins and a 4.2×3.3 cm lesion in Segment IVb. Arterial rim "
                        "enhancement with washout; hypointense on hepatobiliary phase. Enlarged periportal lymph "
                        "nodes.",
                        "1. Segment IVb lesion suggestive of HCC. 2. Cirrhosis with portal hypertension. "
                        "3. Enlarged lymph nodes, metastasis cannot be excluded."});
    }
    for (auto& rec : synthesize_reports(24, 0x5EEDULL, "example")) {
        pool.push_back({std::move(rec.findings), std::move(rec.ground_truth_conclusion)});
    }
    return pool;
}

}  // namespace mdca
