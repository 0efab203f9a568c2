#pragma once

#include <memory>
#include <vector>

#include "pars/chat_client.hpp"
#include "pars/teacher.hpp"

namespace pars::teacher {

class RemoteTeacher final : public TraceGenerator {
 public:
  explicit RemoteTeacher(chat::EndpointConfig cfg)
      : client_(std::make_shared<chat::ChatClient>(std::move(cfg), ErrorCode::TeacherUnavailable)) {}

  Candidate generate(const GenerationRequest& request, const GenerationContext& ctx) override {
    const auto& cfg = client_->config();
    std::vector<chat::Message> messages;
    if (!cfg.system_prompt.empty()) messages.push_back({"system", cfg.system_prompt});
    messages.push_back({"user", request.prompt_text});

    const int max_tokens = request.max_output_tokens > 0 ? request.max_output_tokens : cfg.max_output_tokens;
    const chat::ChatResponse res = client_->complete(messages, request.temperature, max_tokens);

    Candidate c;
    c.trace = res.content;
    c.prediction = extract_answer(c.trace);
    c.round_index = ctx.round_index;
    c.batch_index_j = ctx.batch_index_j;
    c.temperature = request.temperature;
    if (res.prompt_tokens && res.completion_tokens) {
      c.tokens_in = *res.prompt_tokens;
      c.tokens_out = *res.completion_tokens;
    } else {
      std::size_t prompt_chars = 0;
      for (const auto& m : messages) prompt_chars += m.content.size();
      c.tokens_in = res.prompt_tokens.value_or(
          estimate_tokens(prompt_chars, cfg.chars_per_token));
      c.tokens_out = res.completion_tokens.value_or(estimate_tokens(c.trace, cfg.chars_per_token));
      c.tokens_estimated = true;
    }
    return c;
  }

 private:
  std::shared_ptr<chat::ChatClient> client_;
};

}  // namespace pars::teacher
