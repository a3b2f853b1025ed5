// Minimal RIFF/WAVE reader and writer.
//
// Writes 32-bit float PCM. Reads 32-bit float and 16-bit integer PCM
// (integer samples are scaled by exactly 1/32768).
#ifndef MIXBEAM_WAV_HPP
#define MIXBEAM_WAV_HPP

#include <string>

#include "mixbeam/common.hpp"

namespace mixbeam {

Audio read_wav(const std::string& path);
void write_wav(const std::string& path, const Audio& audio);

}  // namespace mixbeam

#endif  // MIXBEAM_WAV_HPP
