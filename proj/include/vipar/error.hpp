#pragma once

#include <stdexcept>
#include <string>

namespace vipar {

// All library errors carry the originating module so the CLI can prefix
// messages ("ingest: ...", "stats: ...").
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

#define VIPAR_DEFINE_ERROR(Name, module_name)                                  \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(module_name, what) {}   \
    };

VIPAR_DEFINE_ERROR(IngestError, "ingest")
VIPAR_DEFINE_ERROR(NetworkError, "network")
VIPAR_DEFINE_ERROR(MeasuresError, "measures")
VIPAR_DEFINE_ERROR(RulesError, "rules")
VIPAR_DEFINE_ERROR(StatsError, "stats")
VIPAR_DEFINE_ERROR(EvalError, "eval")
VIPAR_DEFINE_ERROR(SynthError, "synth")

#undef VIPAR_DEFINE_ERROR

} // namespace vipar
