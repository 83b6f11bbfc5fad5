// Adapters that back the summarizer and attribute-extractor interfaces with a
// chat backend, with instruction text supplied by configuration.
#pragma once

#include <memory>
#include <string>

#include "afa/backend.hpp"
#include "afa/memory_store.hpp"
#include "afa/persona.hpp"

namespace afa {

inline constexpr const char* kDefaultSummarizerInstruction =
    "Summarize the following conversation in at most 120 words, preserving names, "
    "preferences, and open tasks.";

// One user message carrying the instruction and the "Q: .. / A: .." window.
// A backend failure propagates and defers the rollover (RolloverFailed path).
Summarizer make_llm_summarizer(std::shared_ptr<ChatBackend> backend,
                               std::string instruction = kDefaultSummarizerInstruction,
                               std::string model_name = "default");

inline constexpr const char* kDefaultExtractorInstruction =
    "Extract personality attributes from the user message. Reply with a JSON array "
    "of objects {\"category\", \"key\", \"value\"} where category is one of "
    "Demographics, Career, MotivationsValues, DecisionStyle, Preferences, "
    "EmotionalTriggers. Reply [] when nothing applies.";

// Parses the backend reply as a JSON attribute array; anything malformed
// raises ExtractionFailed (callers treat that as an empty extraction).
AttributeExtractor make_llm_extractor(std::shared_ptr<ChatBackend> backend,
                                      std::string instruction = kDefaultExtractorInstruction,
                                      std::string model_name = "default");

}  // namespace afa
