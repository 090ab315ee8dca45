#include <cctype>

#include "decompeval/errors.hpp"
#include "decompeval/scorer.hpp"

namespace decompeval {

PromptAssembly truncate_prompt(PromptAssembly assembly, std::size_t budget,
                               const AblationConfig& ablation) {
  for (;;) {
    const std::size_t length = assemble(assembly, ablation).size();
    if (length <= budget) return assembly;

    EvaluationField* longest = nullptr;
    for (auto& field : assembly.evaluation_input) {
      if (field.truncatable && !field.text.empty() &&
          (longest == nullptr || field.text.size() > longest->text.size())) {
        longest = &field;
      }
    }
    if (longest == nullptr) {
      throw BudgetExceededError("prompt needs " + std::to_string(length) +
                                " chars without any context; budget is " +
                                std::to_string(budget));
    }

    std::string& text = longest->text;
    std::size_t cut = std::min(length - budget, text.size());
    auto is_space = [&](std::size_t i) { return std::isspace(static_cast<unsigned char>(text[i])); };
    while (cut < text.size() && !is_space(cut)) ++cut;
    while (cut < text.size() && is_space(cut)) ++cut;
    text.erase(0, cut);
  }
}

}  // namespace decompeval
