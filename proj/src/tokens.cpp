#include "ocd/tokens.hpp"

#include "ocd/errors.hpp"

namespace ocd {

const TokenCounter& default_token_counter()
{
    static const ApproxTokenCounter counter;
    return counter;
}

std::shared_ptr<const TokenCounter> make_token_counter(std::string_view name)
{
    if (name == "approx")
        return std::make_shared<ApproxTokenCounter>();
    throw ValidationError("unknown token counter: " + std::string(name));
}

} // namespace ocd
