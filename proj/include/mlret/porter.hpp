#pragma once

#include <string>
#include <string_view>

namespace mlret::porter {

// One pass of the Porter suffix-stripping algorithm (the classic five-step
// procedure, https://tartarus.org/martin/PorterStemmer/def.txt).
//
// Operates on lowercase ASCII words. Words shorter than three letters or
// containing anything outside [a-z] are returned unchanged. A single pass is
// not idempotent ("agreed" -> "agre" -> "agr"); callers that need a stable
// surface form use stem_fixpoint.
std::string stem(std::string_view word);

// Applies stem() until the word stops changing.
std::string stem_fixpoint(std::string_view word);

}  // namespace mlret::porter
