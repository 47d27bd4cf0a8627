#pragma once

#include <stdexcept>
#include <string>

namespace painter {

/// Base for every structured error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PAINTER_DEFINE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

// codec
PAINTER_DEFINE_ERROR(MalformedStroke);
PAINTER_DEFINE_ERROR(MalformedTranscript);
PAINTER_DEFINE_ERROR(MalformedStream);
PAINTER_DEFINE_ERROR(UnknownWord);

// raster
PAINTER_DEFINE_ERROR(EmptyStrokes);
PAINTER_DEFINE_ERROR(MalformedPPM);

// dataset
PAINTER_DEFINE_ERROR(ParseError);
PAINTER_DEFINE_ERROR(UnknownClass);
PAINTER_DEFINE_ERROR(MissingClass);
PAINTER_DEFINE_ERROR(IncompatibleScene);

// neural core / trainer
PAINTER_DEFINE_ERROR(ContextOverflow);
PAINTER_DEFINE_ERROR(EmptyMask);
PAINTER_DEFINE_ERROR(VersionMismatch);
PAINTER_DEFINE_ERROR(ShapeMismatch);
PAINTER_DEFINE_ERROR(CheckpointError);
PAINTER_DEFINE_ERROR(IoError);

#undef PAINTER_DEFINE_ERROR

}  // namespace painter
