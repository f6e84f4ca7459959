#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace retistab {

// Base class for all toolkit errors. kind() is the stable machine-readable
// identifier emitted in the CLI's error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define RETISTAB_DEFINE_ERROR(Name, Kind)                 \
    class Name : public Error {                           \
    public:                                               \
        explicit Name(const std::string& m) : Error(Kind, m) {} \
    };

RETISTAB_DEFINE_ERROR(InputFormatError, "input-format")
RETISTAB_DEFINE_ERROR(CorruptInputError, "corrupt-input")
RETISTAB_DEFINE_ERROR(EmptyInputError, "empty-input")
RETISTAB_DEFINE_ERROR(WriteError, "write")
RETISTAB_DEFINE_ERROR(ParseError, "parse")
RETISTAB_DEFINE_ERROR(IndexRangeError, "range")
RETISTAB_DEFINE_ERROR(ValidationError, "validation")
RETISTAB_DEFINE_ERROR(NoOdrError, "no-odr")
RETISTAB_DEFINE_ERROR(SizeError, "size")
RETISTAB_DEFINE_ERROR(TemplateTooLargeError, "template-too-large")
RETISTAB_DEFINE_ERROR(TooShortError, "too-short")
RETISTAB_DEFINE_ERROR(AlignmentError, "alignment")
RETISTAB_DEFINE_ERROR(SynthSpecError, "spec")
RETISTAB_DEFINE_ERROR(UsageError, "usage")

#undef RETISTAB_DEFINE_ERROR

}  // namespace retistab
