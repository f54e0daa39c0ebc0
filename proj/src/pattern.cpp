#include "migbench/pattern.hpp"

#include "migbench/error.hpp"

#include <boost/regex.hpp>

namespace migbench {

struct Pattern::Compiled {
    boost::regex re;
};

Pattern Pattern::compile(std::string_view source) {
    Pattern p;
    p.source_ = std::string(source);
    try {
        p.compiled_ = std::make_shared<const Compiled>(Compiled{boost::regex(p.source_, boost::regex::perl)});
    } catch (const boost::regex_error& e) {
        throw Error(ErrorCode::BadRegex, "pattern '" + p.source_ + "' at position " + std::to_string(e.position()) +
                                             ": " + e.what());
    }
    return p;
}

bool Pattern::search_nonempty(std::string_view line) const {
    boost::match_results<std::string_view::const_iterator> m;
    return boost::regex_search(line.begin(), line.end(), m, compiled_->re, boost::match_not_null);
}

bool Pattern::matches_empty() const {
    const std::string empty;
    return boost::regex_search(empty, compiled_->re);
}

}  // namespace migbench
