#pragma once

// Instruction templates for the detector model: the guard-style SFT prompt
// and the analyze-then-answer RFT prompt (zero-shot or few-shot).

#include "privgate/policy.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace privgate::dlms {

struct FewShotExample {
    std::string analysis;
    std::string answer;  // answer block, one item per line
};

inline const std::vector<FewShotExample>& default_few_shot_examples() {
    static const std::vector<FewShotExample> examples{
        {"analyzing process here", "unsafe\nT1, T6\ncustomer@gmail.com; 150,000"},
        {"analyzing process here", "safe"},
        {"analyzing process here", "unsafe\nT2, T3, T6\n983-4012-949CN; +853-3406-2844; 875,500; 124,500"},
    };
    return examples;
}

class PromptTemplateKind {
public:
    enum class Kind { SftGuard, RftZeroShot, RftFewShot };

    static PromptTemplateKind sft() { return PromptTemplateKind(Kind::SftGuard, {}); }
    static PromptTemplateKind rft_zero_shot() { return PromptTemplateKind(Kind::RftZeroShot, {}); }
    static PromptTemplateKind rft_few_shot(std::vector<FewShotExample> examples = default_few_shot_examples()) {
        if (examples.empty()) throw std::invalid_argument("few-shot template needs at least one example");
        return PromptTemplateKind(Kind::RftFewShot, std::move(examples));
    }

    Kind kind() const noexcept { return kind_; }
    const std::vector<FewShotExample>& examples() const noexcept { return examples_; }
    bool is_rft() const noexcept { return kind_ != Kind::SftGuard; }

private:
    PromptTemplateKind(Kind kind, std::vector<FewShotExample> examples)
        : kind_(kind), examples_(std::move(examples)) {}

    Kind kind_;
    std::vector<FewShotExample> examples_;
};

namespace detail {

inline std::string header(const policy::PolicyCatalog& catalog, std::string_view message,
                          std::string_view role) {
    std::string out;
    out += "[INST] Task: Check if there is unsafe content in '";
    out += role;
    out += "' messages in conversations according to our safety policy with the below categories.\n\n";
    out += "<BEGIN UNSAFE CONTENT CATEGORIES>\n";
    out += policy::render_category_block(catalog);
    out += "\n<END UNSAFE CONTENT CATEGORIES>\n";
    out += "<BEGIN CONVERSATION>\nUser: ";
    out += message;
    out += "\n<END CONVERSATION>\n\n";
    return out;
}

inline void append_indented(std::string& out, std::string_view block, std::string_view indent) {
    for (const auto line : text::split(block, '\n')) {
        out += indent;
        out += line;
        out += '\n';
    }
}

}  // namespace detail

inline std::string build_sft_prompt(std::string_view message, const policy::PolicyCatalog& catalog,
                                    std::string_view role = "User") {
    std::string out = detail::header(catalog, message, role);
    out += "Provide your safety assessment for ";
    out += role;
    out += " in the above conversation:\n\n";
    out += "- The first line must state either 'safe' or 'unsafe'.\n";
    out += "- If the assessment is 'unsafe':\n";
    out += "     - The second line must list the violated category codes (e.g., 'T1', 'T5') as a "
           "comma-separated string.\n";
    out += "     - The third line must list the unsafe entities as a semicolon-separated string. "
           "Output them exactly as they appear in the original message. [/INST]";
    return out;
}

inline std::string build_rft_prompt(std::string_view message, const policy::PolicyCatalog& catalog,
                                    const PromptTemplateKind& kind, std::string_view role = "User") {
    std::string out = detail::header(catalog, message, role);
    out += "Provide your safety assessment for ONLY THE LAST ";
    out += role;
    out += " message in the above conversation:\n\n";
    out += "1. **Analyzing Process**:\n";
    out += "   - Analyze the user's message for each unsafe content category and reason your way to "
           "a conclusion.\n";
    out += "   - Enclose the analyzing process within '<analyze>...</analyze>' tags.\n\n";
    out += "2. **Final Answer**:\n";
    out += "   - Provide your final safety assessment enclosed within '<answer>...</answer>' tags.\n";
    out += "   - The format inside '<answer>...</answer>' should be as follows:\n";
    out += "     - The first line must state either 'safe' or 'unsafe'.\n";
    out += "     - If the assessment is 'unsafe':\n";
    out += "       - The second line must list the violated category codes (e.g., 'T1', 'T5') as a "
           "comma-separated string.\n";
    out += "       - The third line must list the unsafe entities as a semicolon-separated string. "
           "Output them exactly as they appear in the original message.";
    if (kind.kind() == PromptTemplateKind::Kind::RftFewShot) {
        const auto& examples = kind.examples();
        for (std::size_t i = 0; i < examples.size(); ++i) {
            out += "\n\n**Example " + std::to_string(i + 1) + "**:\n";
            out += "    <analyze>\n";
            detail::append_indented(out, examples[i].analysis, "    ");
            out += "    </analyze>\n";
            out += "    <answer>\n";
            detail::append_indented(out, examples[i].answer, "    ");
            out += "    </answer>";
        }
    }
    out += " [/INST]";
    return out;
}

inline std::string build_prompt(std::string_view message, const policy::PolicyCatalog& catalog,
                                const PromptTemplateKind& kind, std::string_view role = "User") {
    return kind.is_rft() ? build_rft_prompt(message, catalog, kind, role)
                         : build_sft_prompt(message, catalog, role);
}

}  // namespace privgate::dlms
