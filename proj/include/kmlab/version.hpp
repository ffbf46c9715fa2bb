#pragma once

#define KMLAB_VERSION "1.0.0"
