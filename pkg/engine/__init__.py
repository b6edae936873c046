# Refactoring optimizer engine
