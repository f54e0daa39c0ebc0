#pragma once

#include <memory>
#include <string>
#include <string_view>

struct evp_md_ctx_st;

namespace migbench {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Incremental SHA-256 for digests assembled from many fields.
class Sha256 {
public:
    Sha256();

    Sha256& update(std::string_view bytes);
    /// Writes `field` followed by a NUL separator so adjacent fields cannot alias.
    Sha256& field(std::string_view field);
    std::string hex();

private:
    struct CtxFree {
        void operator()(evp_md_ctx_st* ctx) const noexcept;
    };
    std::unique_ptr<evp_md_ctx_st, CtxFree> ctx_;
};

}  // namespace migbench
