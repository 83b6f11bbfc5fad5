#include "afa/llm_adapters.hpp"

#include "json.hpp"

#include "afa/error.hpp"

namespace afa {

Summarizer make_llm_summarizer(std::shared_ptr<ChatBackend> backend,
                               std::string instruction, std::string model_name) {
  return [backend = std::move(backend), instruction = std::move(instruction),
          model_name = std::move(model_name)](const std::vector<Turn>& window) {
    if (window.empty()) {
      raise(ErrorCode::InvalidArgument, "llm summarizer: empty window");
    }
    std::string text = instruction;
    text += "\n\n";
    for (const auto& turn : window) {
      text += "Q: " + turn.query + "\nA: " + turn.response + "\n";
    }
    ChatRequest request;
    request.model_name = model_name;
    request.messages = {{"user", text}};
    std::string summary = backend->complete(request);
    if (summary.empty()) {
      raise(ErrorCode::BackendUnavailable, "llm summarizer returned empty text");
    }
    return summary;
  };
}

AttributeExtractor make_llm_extractor(std::shared_ptr<ChatBackend> backend,
                                      std::string instruction, std::string model_name) {
  return [backend = std::move(backend), instruction = std::move(instruction),
          model_name = std::move(model_name)](const std::string& query) {
    if (query.empty()) {
      raise(ErrorCode::InvalidArgument, "extract_attributes: empty query");
    }
    ChatRequest request;
    request.model_name = model_name;
    request.messages = {{"system", instruction}, {"user", query}};
    std::string reply;
    try {
      reply = backend->complete(request);
    } catch (const Error& e) {
      raise(ErrorCode::ExtractionFailed,
            std::string("extractor backend failed: ") + e.what());
    }
    std::vector<PersonaAttribute> attrs;
    try {
      nlohmann::json doc = nlohmann::json::parse(reply);
      if (!doc.is_array()) {
        raise(ErrorCode::ExtractionFailed, "extractor reply is not a JSON array");
      }
      for (const auto& item : doc) {
        auto category = category_from_name(item.at("category").get<std::string>());
        if (!category) {
          raise(ErrorCode::ExtractionFailed,
                "unknown category: " + item.at("category").get<std::string>());
        }
        PersonaAttribute attr;
        attr.category = *category;
        attr.key = item.at("key").get<std::string>();
        attr.value = item.at("value").get<std::string>();
        attr.provenance = Provenance::Synchronized;
        if (attr.key.empty() || attr.value.empty()) continue;
        attrs.push_back(std::move(attr));
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      raise(ErrorCode::ExtractionFailed,
            std::string("malformed extractor reply: ") + e.what());
    }
    return attrs;
  };
}

}  // namespace afa
