#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace ocd {

/// Counts tokens for budgets and compression metrics. Adapters for a
/// specific downstream tokenizer implement this interface.
class TokenCounter
{
public:
    virtual ~TokenCounter() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// ceil(bytes / 4): deterministic and tokenizer-free.
class ApproxTokenCounter : public TokenCounter
{
public:
    std::size_t count(std::string_view text) const override { return (text.size() + 3) / 4; }
    std::string name() const override { return "approx"; }
};

const TokenCounter& default_token_counter();

/// Looks up a counter by its configuration name; throws ValidationError.
std::shared_ptr<const TokenCounter> make_token_counter(std::string_view name);

} // namespace ocd
