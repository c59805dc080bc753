#pragma once

#include <ostream>
#include <string>

#include "ragfaith/judge.hpp"
#include "ragfaith/retrieval.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitFatal = 2;

/// Entry point of the `ragfaith` binary; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// One `generate` output line: the question, its retrieved passages and the
/// generated answer. With nothing retrieved no model call is made and the
/// record carries "retrieval_empty": true.
json generate_record(const std::string& id, const std::string& question,
                     const Retriever& retriever, AnswerGenerator& generator);

}  // namespace ragfaith
