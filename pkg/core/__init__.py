# pluriflow core
