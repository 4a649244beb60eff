#pragma once

#include "lexsel/align.hpp"
#include "lexsel/annotate.hpp"
#include "lexsel/annotation_server.hpp"
#include "lexsel/chat.hpp"
#include "lexsel/corpus.hpp"
#include "lexsel/dataset.hpp"
#include "lexsel/error.hpp"
#include "lexsel/eval.hpp"
#include "lexsel/hash.hpp"
#include "lexsel/http_chat.hpp"
#include "lexsel/jsonl.hpp"
#include "lexsel/log.hpp"
#include "lexsel/mine.hpp"
#include "lexsel/random.hpp"
#include "lexsel/rules.hpp"
#include "lexsel/synth.hpp"
#include "lexsel/text.hpp"

namespace lexsel {

inline constexpr const char* version = "0.1.0";

}  // namespace lexsel
