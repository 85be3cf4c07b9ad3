#pragma once

#include <stdexcept>
#include <string>

namespace raqam {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- I/O and parsing ---
struct NotFound : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct MalformedWav : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

// --- corpus / lexicon ---
struct UnknownWord : Error { using Error::Error; };
struct UnknownPhone : Error { using Error::Error; };
struct DuplicatePath : Error { using Error::Error; };

// --- configuration / data shape ---
struct ConfigInvalid : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };
struct InvalidK : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// --- model evaluation ---
struct SymbolOutOfRange : Error { using Error::Error; };
struct EmptyObservation : Error { using Error::Error; };
struct AlphabetMismatch : Error { using Error::Error; };
struct EmptyList : Error { using Error::Error; };

// --- search ---
struct NoSurvivingPath : Error { using Error::Error; };

}  // namespace raqam
