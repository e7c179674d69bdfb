# Data package initialization