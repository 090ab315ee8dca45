#pragma once

#include <string>

#include "decompeval/core.hpp"
#include "decompeval/prompts.hpp"

namespace decompeval::fixtures {

inline const std::string kSoupHistory =
    "Speaker A: I don't watch them very often. Apparently there was a showing of the recent "
    "film in a park in D.C. That's one U.S. city I haven't been to.\n"
    "Speaker B: Sadly, I haven't been to DC either, although I've always wanted to visit there. "
    "Apparently there's a lot of interesting going down this summer. They're having a crab feast "
    "at the Navy-Marine Corps Stadium. They'll have 100 gallons of crab soup! Can you imagine that "
    "much soup?";

inline const std::string kSoupResponse =
    "Wow that's a lot of soup. Are you talking about the Fort-Reno Concert? I heard flasher will "
    "perform there.";

// Topical-Chat coherence case with a 2.667 mean human rating.
inline EvaluationSample soup_sample() {
  EvaluationSample sample;
  sample.id = "tc-soup";
  sample.group_id = "tc-soup-context";
  sample.system_id = "model-a";
  sample.context["dialogue_history"] = kSoupHistory;
  sample.context["fact"] = "The Navy-Marine Corps Stadium hosts an annual crab feast.";
  sample.generated = kSoupResponse;
  sample.human_scores["coherence"] = 2.667;
  return sample;
}

inline const DimensionSpec& preset(Task task, const std::string& name) {
  return preset_specs().at({task, name});
}

}  // namespace decompeval::fixtures
